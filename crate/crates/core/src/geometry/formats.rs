//! Mask readers and writers: netpbm (P1/P2/P4/P5) for 2D, `bvox` for 3D.
//!
//! `bvox` is a single ASCII header line `BVOX <nx> <ny> <nz> <hx> <hy> <hz>\n`
//! followed by exactly `nx*ny*nz` raw bytes, x fastest. Nonzero bytes are
//! foreground.

use std::io::Write;
use std::path::Path;

use super::BinaryDomain;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskFormat {
    Pgm,
    Pbm,
    Bvox,
}

impl MaskFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" => Some(Self::Pgm),
            "pbm" => Some(Self::Pbm),
            "bvox" => Some(Self::Bvox),
            _ => None,
        }
    }
}

/// Reads a mask file. `threshold` defaults to half the PGM maximum (127 for
/// 8-bit data) and to "any nonzero" for PBM and bvox.
pub fn load_domain(
    path: &Path,
    format: Option<MaskFormat>,
    threshold: Option<u32>,
) -> Result<BinaryDomain> {
    let format = match format.or_else(|| MaskFormat::from_path(path)) {
        Some(f) => f,
        None => return Err(Error::parse(path, "cannot infer mask format from extension")),
    };
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("domain")
        .to_string();
    parse_domain(&bytes, format, threshold, &id).map_err(|e| match e {
        Error::ParseError { reason, .. } => Error::parse(path, reason),
        other => other,
    })
}

pub fn parse_domain(
    bytes: &[u8],
    format: MaskFormat,
    threshold: Option<u32>,
    identifier: &str,
) -> Result<BinaryDomain> {
    match format {
        MaskFormat::Pgm | MaskFormat::Pbm => parse_netpbm(bytes, format, threshold, identifier),
        MaskFormat::Bvox => parse_bvox(bytes, threshold, identifier),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        self.token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse("<input>", format!("bad or missing {what}")))
    }
}

fn parse_netpbm(
    bytes: &[u8],
    format: MaskFormat,
    threshold: Option<u32>,
    id: &str,
) -> Result<BinaryDomain> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur
        .token()
        .ok_or_else(|| Error::parse("<input>", "missing magic number"))?;
    let expected: &[&str] = match format {
        MaskFormat::Pgm => &["P2", "P5"],
        MaskFormat::Pbm => &["P1", "P4"],
        MaskFormat::Bvox => unreachable!(),
    };
    if !expected.contains(&magic) {
        return Err(Error::parse(
            "<input>",
            format!("unexpected magic {magic:?}, expected one of {expected:?}"),
        ));
    }
    let width: usize = cur.number("width")?;
    let height: usize = cur.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::parse("<input>", "zero image size"));
    }
    let n = width * height;
    let mask: Vec<bool> = match magic {
        "P2" | "P5" => {
            let maxval: u32 = cur.number("maxval")?;
            if maxval == 0 || maxval > 65535 {
                return Err(Error::parse("<input>", format!("invalid maxval {maxval}")));
            }
            let thr = threshold.unwrap_or(maxval / 2);
            let values: Vec<u32> = if magic == "P2" {
                (0..n)
                    .map(|_| cur.number::<u32>("pixel value"))
                    .collect::<Result<_>>()?
            } else {
                // Exactly one whitespace byte separates the header from the raster.
                let start = cur.pos + 1;
                let width_bytes = if maxval < 256 { 1 } else { 2 };
                let raster = bytes
                    .get(start..start + n * width_bytes)
                    .ok_or_else(|| Error::parse("<input>", "truncated raster"))?;
                if width_bytes == 1 {
                    raster.iter().map(|&b| b as u32).collect()
                } else {
                    raster
                        .chunks_exact(2)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                        .collect()
                }
            };
            if let Some(v) = values.iter().find(|&&v| v > maxval) {
                return Err(Error::parse("<input>", format!("pixel {v} exceeds maxval")));
            }
            values.into_iter().map(|v| v > thr).collect()
        }
        "P1" => {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                cur.skip_ws_and_comments();
                match bytes.get(cur.pos) {
                    Some(b'0') => out.push(0u32),
                    Some(b'1') => out.push(1u32),
                    Some(c) => {
                        return Err(Error::parse(
                            "<input>",
                            format!("unexpected byte {c:#x} in P1 raster"),
                        ))
                    }
                    None => return Err(Error::parse("<input>", "truncated raster")),
                }
                cur.pos += 1;
            }
            let thr = threshold.unwrap_or(0);
            out.into_iter().map(|v| v > thr).collect()
        }
        _ => {
            let start = cur.pos + 1;
            let row_bytes = width.div_ceil(8);
            let raster = bytes
                .get(start..start + row_bytes * height)
                .ok_or_else(|| Error::parse("<input>", "truncated raster"))?;
            let thr = threshold.unwrap_or(0);
            let mut out = Vec::with_capacity(n);
            for row in raster.chunks_exact(row_bytes) {
                for x in 0..width {
                    let bit = (row[x / 8] >> (7 - (x % 8))) & 1;
                    out.push(bit as u32 > thr);
                }
            }
            out
        }
    };
    BinaryDomain::new(vec![width, height], vec![1.0, 1.0], mask, id)
}

fn parse_bvox(bytes: &[u8], threshold: Option<u32>, id: &str) -> Result<BinaryDomain> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse("<input>", "missing bvox header line"))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::parse("<input>", "bvox header is not ASCII"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "BVOX" {
        return Err(Error::parse(
            "<input>",
            format!("malformed bvox header {header:?}"),
        ));
    }
    let mut extents = Vec::with_capacity(3);
    for f in &fields[1..4] {
        let n: usize = f
            .parse()
            .map_err(|_| Error::parse("<input>", format!("bad extent {f:?}")))?;
        extents.push(n);
    }
    let mut spacing = Vec::with_capacity(3);
    for f in &fields[4..7] {
        let h: f64 = f
            .parse()
            .map_err(|_| Error::parse("<input>", format!("bad spacing {f:?}")))?;
        spacing.push(h);
    }
    let n: usize = extents.iter().product();
    let raster = &bytes[newline + 1..];
    if raster.len() != n {
        return Err(Error::parse(
            "<input>",
            format!("expected {n} voxel bytes, found {}", raster.len()),
        ));
    }
    let thr = threshold.unwrap_or(0);
    let mask = raster.iter().map(|&b| b as u32 > thr).collect();
    BinaryDomain::new(extents, spacing, mask, id)
}

/// Writes a 2D domain as binary PGM (P5), foreground 255.
pub fn write_pgm(dom: &BinaryDomain, out: &mut impl Write) -> std::io::Result<()> {
    let (w, h) = planar_extents(dom)?;
    write!(out, "P5\n{w} {h}\n255\n")?;
    let raster: Vec<u8> = dom.mask().iter().map(|&b| if b { 255 } else { 0 }).collect();
    out.write_all(&raster)
}

/// Writes a 2D domain as ASCII PBM (P1).
pub fn write_pbm(dom: &BinaryDomain, out: &mut impl Write) -> std::io::Result<()> {
    let (w, h) = planar_extents(dom)?;
    writeln!(out, "P1\n{w} {h}")?;
    for row in dom.mask().chunks(w) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_bvox(dom: &BinaryDomain, out: &mut impl Write) -> std::io::Result<()> {
    if dom.dimension() != 3 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "bvox requires a 3D domain",
        ));
    }
    let n = dom.extents();
    let h = dom.spacing();
    writeln!(
        out,
        "BVOX {} {} {} {} {} {}",
        n[0], n[1], n[2], h[0], h[1], h[2]
    )?;
    let raster: Vec<u8> = dom.mask().iter().map(|&b| b as u8).collect();
    out.write_all(&raster)
}

fn planar_extents(dom: &BinaryDomain) -> std::io::Result<(usize, usize)> {
    if dom.dimension() != 2 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "netpbm requires a 2D domain",
        ));
    }
    Ok((dom.extents()[0], dom.extents()[1]))
}
