//! Command-line front end: parses flags into a validated job and runs it.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::distances::{distance, residual_ratio, select_truncation, DistanceParams, Metric, DEFAULT_MODES};
use crate::eigensolver::{smallest_eigenvalues, Normalisation, SolverOptions, Spectrum};
use crate::embedding::{isomap, pairwise_matrix, pool, AffinityMatrix};
use crate::error::{Error, Result};
use crate::geometry::load_domain;
use crate::laplacian::SparseOperator;
use crate::retrieval::{evaluate, load_labels, LabeledDataset};

#[derive(Debug, Parser)]
#[command(name = "wesd", version, about = "Laplace-Dirichlet spectra and weighted spectral distances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the smallest eigenvalues of one or more mask files.
    Spectrum(SpectrumArgs),
    /// Distance between two spectrum files, printed as JSON.
    Distance(DistanceArgs),
    /// Pairwise distance matrix over a directory of spectrum files.
    Matrix(MatrixArgs),
    /// ISOMAP embedding of an affinity matrix.
    Embed(EmbedArgs),
    /// Retrieval scores of an affinity matrix against class labels.
    Retrieve(RetrieveArgs),
    /// Shape-independent residual ratio, or the smallest N reaching a target.
    Residual(ResidualArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizeFlag {
    None,
    Volume,
    First,
}

impl NormalizeFlag {
    fn mode(self) -> Option<Normalisation> {
        match self {
            NormalizeFlag::None => None,
            NormalizeFlag::Volume => Some(Normalisation::Volume),
            NormalizeFlag::First => Some(Normalisation::FirstEigenvalue),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricFlag {
    Wesd,
    Nwesd,
    Shapedna,
}

impl From<MetricFlag> for Metric {
    fn from(m: MetricFlag) -> Metric {
        match m {
            MetricFlag::Wesd => Metric::Wesd,
            MetricFlag::Nwesd => Metric::Nwesd,
            MetricFlag::Shapedna => Metric::ShapeDna,
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Mask files (.pgm, .pbm, .bvox).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file for one input, output directory for several.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    pub modes: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = NormalizeFlag::None)]
    pub normalize: NormalizeFlag,
    /// Foreground threshold for grey-level masks.
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Exponent; defaults to 1.5 in 2D and 2 in 3D.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MODES)]
    pub modes: usize,
    #[arg(long, value_enum, default_value_t = MetricFlag::Wesd)]
    pub metric: MetricFlag,
    /// Normalise raw spectra on load.
    #[arg(long, value_enum, default_value_t = NormalizeFlag::None)]
    pub normalize: NormalizeFlag,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Directory holding `*.json` spectrum files.
    pub dir: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    pub matrix: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    pub matrix: PathBuf,
    /// CSV of `id,class` lines.
    pub labels: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[arg(long)]
    pub p: f64,
    /// Dimension of the shapes.
    #[arg(long = "space-dim")]
    pub space_dim: usize,
    /// Truncation levels to tabulate.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 50, 100, 200])]
    pub modes: Vec<usize>,
    /// Print the smallest N whose residual ratio is at most this value.
    #[arg(long)]
    pub target: Option<f64>,
}

/// Exit status for an error: 1 for solver non-convergence, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 1,
        _ => 2,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Distance(a) => cmd_distance(&a, out),
        Command::Matrix(a) => cmd_matrix(&a, out),
        Command::Embed(a) => cmd_embed(&a, out),
        Command::Retrieve(a) => cmd_retrieve(&a, out),
        Command::Residual(a) => cmd_residual(&a, out),
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("--{name} must be at least 1")));
    }
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("writing standard output", e)),
    }
}

fn spectrum_of(path: &Path, a: &SpectrumArgs, opts: &SolverOptions) -> Result<Spectrum> {
    let dom = load_domain(path, None, a.threshold)?;
    let op = SparseOperator::assemble(&dom)?;
    let spec = smallest_eigenvalues(&op, a.modes, opts)?.with_identifier(dom.identifier());
    match a.normalize.mode() {
        Some(m) => spec.normalize(m),
        None => Ok(spec),
    }
}

pub fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    positive("modes", a.modes)?;
    positive("workers", a.workers)?;
    if !(a.tol > 0.0 && a.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("--tol must lie in (0, 1), got {}", a.tol)));
    }
    let opts = SolverOptions {
        tol: a.tol,
        seed: a.seed,
        ..SolverOptions::default()
    };
    if let [input] = a.inputs.as_slice() {
        return spectrum_of(input, a, &opts)?.save(&a.output);
    }
    std::fs::create_dir_all(&a.output)
        .map_err(|e| Error::io(format!("creating {}", a.output.display()), e))?;
    let spectra: Vec<Spectrum> = pool(a.workers)?.install(|| {
        a.inputs
            .par_iter()
            .map(|p| spectrum_of(p, a, &opts))
            .collect::<Result<_>>()
    })?;
    for s in &spectra {
        s.save(a.output.join(format!("{}.json", s.identifier)))?;
    }
    Ok(())
}

fn prepare(spec: Spectrum, mode: Option<Normalisation>) -> Result<Spectrum> {
    match mode {
        Some(m) if spec.normalisation == Normalisation::Raw => spec.normalize(m),
        Some(m) if spec.normalisation != m => Err(Error::NormalisationMismatch(
            spec.normalisation.to_string(),
            m.to_string(),
        )),
        _ => Ok(spec),
    }
}

fn params(m: &MetricArgs, d: usize) -> Result<DistanceParams> {
    positive("modes", m.modes)?;
    let mut params = DistanceParams::defaults(d, m.metric.into());
    params.n = m.modes;
    if let Some(p) = m.p {
        params.p = p;
    }
    Ok(params)
}

pub fn cmd_distance(a: &DistanceArgs, out: &mut dyn Write) -> Result<()> {
    let mode = a.metric.normalize.mode();
    let s1 = prepare(Spectrum::load(&a.first)?, mode)?;
    let s2 = prepare(Spectrum::load(&a.second)?, mode)?;
    let report = distance(&s1, &s2, &params(&a.metric, s1.dimension)?)?;
    let text = serde_json::to_string_pretty(&report)?;
    write_output(None, &(text + "\n"), out)
}

/// Spectrum files in `dir`, sorted by file name.
pub fn spectrum_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(format!("reading {}", dir.display()), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(format!("reading {}", dir.display()), e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no spectrum files in {}", dir.display())));
    }
    Ok(files)
}

pub fn cmd_matrix(a: &MatrixArgs, out: &mut dyn Write) -> Result<()> {
    positive("workers", a.workers)?;
    let mode = a.metric.normalize.mode();
    let spectra = spectrum_files(&a.dir)?
        .iter()
        .map(|p| prepare(Spectrum::load(p)?, mode))
        .collect::<Result<Vec<_>>>()?;
    let params = params(&a.metric, spectra[0].dimension)?;
    let m = pairwise_matrix(&spectra, &params, a.workers)?;
    write_output(a.output.as_deref(), &m.to_csv(), out)
}

pub fn cmd_embed(a: &EmbedArgs, out: &mut dyn Write) -> Result<()> {
    positive("neighbors", a.neighbors)?;
    positive("dim", a.dim)?;
    positive("workers", a.workers)?;
    let m = AffinityMatrix::load(&a.matrix)?;
    let e = isomap(&m, a.neighbors, a.dim, a.workers)?;
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("stress: {:.6e}", e.stress);
    write_output(a.output.as_deref(), &e.to_csv(), out)
}

pub fn cmd_retrieve(a: &RetrieveArgs, out: &mut dyn Write) -> Result<()> {
    positive("workers", a.workers)?;
    let m = AffinityMatrix::load(&a.matrix)?;
    let ds = LabeledDataset::from_pairs(m, &load_labels(&a.labels)?)?;
    let scores = evaluate(&ds, a.workers)?;
    for id in &scores.skipped {
        eprintln!("warning: {id} is the only member of its class; skipped");
    }
    let text = serde_json::to_string_pretty(&scores)?;
    write_output(None, &(text + "\n"), out)
}

pub fn cmd_residual(a: &ResidualArgs, out: &mut dyn Write) -> Result<()> {
    let text = match a.target {
        Some(t) => format!("{}\n", select_truncation(a.p, a.space_dim, t)?),
        None => {
            let mut s = String::from("N,R\n");
            for &n in &a.modes {
                s.push_str(&format!("{n},{:.16e}\n", residual_ratio(n, a.p, a.space_dim)?));
            }
            s
        }
    };
    write_output(None, &text, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("wesd").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse() {
        let c = parse(&["distance", "a.json", "b.json", "--metric", "nwesd", "--p", "2", "--normalize", "first"]);
        let Command::Distance(d) = c.command else { panic!() };
        assert_eq!(d.metric.metric, MetricFlag::Nwesd);
        assert_eq!(d.metric.p, Some(2.0));
        assert_eq!(d.metric.normalize, NormalizeFlag::First);
        assert_eq!(d.metric.modes, DEFAULT_MODES);
    }

    #[test]
    fn residual_target() {
        let c = parse(&["residual", "--p", "1.5", "--space-dim", "2", "--target", "0.05"]);
        let mut buf = Vec::new();
        run(c, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "460\n");
    }

    #[test]
    fn residual_table() {
        let c = parse(&["residual", "--p", "2", "--space-dim", "2", "--modes", "10,20"]);
        let mut buf = Vec::new();
        run(c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("N,R\n10,"));
    }

    #[test]
    fn exit_codes() {
        let nc = Error::NonConvergence {
            requested: 3,
            converged: 1,
            matvecs: 10,
        };
        assert_eq!(exit_code(&nc), 1);
        assert_eq!(exit_code(&Error::EmptyForeground), 2);
    }

    #[test]
    fn prepare_respects_existing_mode() {
        let s = Spectrum::new(vec![1.0, 2.0], 2, 2.0).unwrap();
        let v = prepare(s.clone(), Some(Normalisation::Volume)).unwrap();
        assert_eq!(v.normalisation, Normalisation::Volume);
        assert!(prepare(v.clone(), Some(Normalisation::Volume)).is_ok());
        assert!(prepare(v, Some(Normalisation::FirstEigenvalue)).is_err());
        assert_eq!(prepare(s, None).unwrap().normalisation, Normalisation::Raw);
    }
}
