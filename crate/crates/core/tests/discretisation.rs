use wesd::*;

fn square_spectrum(w: usize, n: usize) -> Vec<f64> {
    let h = 1.0 / w as f64;
    let dom = BinaryDomain::from_fn(&[w, w], &[h, h], "sq", |_| true).unwrap();
    let op = SparseOperator::assemble(&dom).unwrap();
    smallest_eigenvalues(&op, n, &SolverOptions::default()).unwrap().eigenvalues
}

fn errors(computed: &[f64], exact: &[f64]) -> Vec<f64> {
    computed.iter().zip(exact).map(|(a, b)| ((a - b) / b).abs()).collect()
}

#[test]
fn refinement_converges_on_the_unit_square() {
    let n = 6;
    let unit = Spectrum::analytic_box(&[1.0, 1.0], n).unwrap().eigenvalues;
    let grids = [20usize, 40, 80];
    let spectra: Vec<Vec<f64>> = grids.iter().map(|&w| square_spectrum(w, n)).collect();

    // Against the unit square the error falls monotonically, roughly halving:
    // the stencil sees a box of side (w + 1) h.
    let e: Vec<Vec<f64>> = spectra.iter().map(|s| errors(s, &unit)).collect();
    for (k, ((a, b), c)) in e[0].iter().zip(&e[1]).zip(&e[2]).enumerate() {
        assert!(a > b && b > c);
        let order = (b / c).log2();
        assert!((0.8..1.3).contains(&order), "mode {k}: order {order}");
    }

    // Against that enlarged box the error is second order.
    for (i, &w) in grids.iter().enumerate().skip(1) {
        let side = |w: usize| (w + 1) as f64 / w as f64;
        let prev = errors(&spectra[i - 1], &Spectrum::analytic_box(&[side(grids[i - 1]); 2], n).unwrap().eigenvalues);
        let cur = errors(&spectra[i], &Spectrum::analytic_box(&[side(w); 2], n).unwrap().eigenvalues);
        for k in 0..n {
            let order = (prev[k] / cur[k]).log2();
            assert!((1.8..2.2).contains(&order), "w={w} mode {k}: order {order}");
        }
    }
}

#[test]
fn computed_spectra_respect_li_yau() {
    let dom = wesd::synth::l_shape(30, 24, 10, "L").unwrap();
    let op = SparseOperator::assemble(&dom).unwrap();
    let s = smallest_eigenvalues(&op, 40, &SolverOptions::default()).unwrap();
    for (i, &l) in s.eigenvalues.iter().enumerate() {
        assert!(l >= wesd::distances::li_yau_lower_bound(i + 1, 2, dom.volume()).unwrap());
    }
    let v = s.normalize(Normalisation::Volume).unwrap();
    for (i, &l) in v.eigenvalues.iter().enumerate() {
        assert!(l >= wesd::distances::li_yau_lower_bound(i + 1, 2, v.effective_volume()).unwrap());
    }
}
