use std::path::Path;

use proptest::prelude::*;

use wesd::distances::{normalisation_factor, residual_ratio, tail_bound_from, truncation_bounds, wesd_kernel};
use wesd::retrieval::{evaluate, LabeledDataset};
use wesd::*;

fn small_mask(d: usize) -> impl Strategy<Value = BinaryDomain> {
    let ext = if d == 2 { vec![2usize..7, 2..7] } else { vec![2usize..5, 2..5, 2..5] };
    (ext, prop::collection::vec(0.3f64..2.0, d)).prop_flat_map(|(extents, spacing)| {
        let n: usize = extents.iter().product();
        prop::collection::vec(any::<bool>(), n)
            .prop_filter("empty", |m| m.iter().any(|&b| b))
            .prop_map(move |mask| BinaryDomain::new(extents.clone(), spacing.clone(), mask, "m").unwrap())
    })
}

fn isometry(d: usize) -> impl Strategy<Value = GridIsometry> {
    (Just((0..d).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), d), prop::collection::vec(-5i64..5, d))
        .prop_map(|(perm, flips, shift)| GridIsometry::new(perm, flips, shift).unwrap())
}

fn sorted_spectrum(len: usize) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(0.5f64..500.0, len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        Spectrum::new(v, 2, 1.0).unwrap()
    })
}

fn rectangle_spectrum(len: usize) -> impl Strategy<Value = Spectrum> {
    (0.3f64..3.0, 0.3f64..3.0).prop_map(move |(a, b)| Spectrum::analytic_box(&[a, b], len).unwrap())
}

fn dense(dom: &BinaryDomain) -> Vec<f64> {
    let op = SparseOperator::assemble(dom).unwrap();
    smallest_eigenvalues(&op, op.order(), &SolverOptions::default()).unwrap().eigenvalues
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_measures_and_spectra(
        (dom, g) in (2usize..=3).prop_flat_map(|d| (small_mask(d), isometry(d))),
    ) {
        // Axis permutations need equal spacings.
        let d = dom.dimension();
        let dom = BinaryDomain::new(dom.extents().to_vec(), vec![dom.spacing()[0]; d], dom.mask().to_vec(), "m").unwrap();
        let image = dom.apply_isometry(&g).unwrap();
        prop_assert_eq!(image.volume(), dom.volume());
        prop_assert_eq!(image.surface_measure(), dom.surface_measure());
        let (a, b) = (dense(&dom), dense(&image));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn spacing_scales_measures(dom in (2usize..=3).prop_flat_map(small_mask), s in 0.1f64..10.0) {
        let d = dom.dimension() as f64;
        let scaled = dom.rescaled(s).unwrap();
        prop_assert!((scaled.volume() - s.powf(d) * dom.volume()).abs() <= 1e-12 * scaled.volume());
        prop_assert!((scaled.surface_measure() - s.powf(d - 1.0) * dom.surface_measure()).abs()
            <= 1e-12 * scaled.surface_measure());
    }

    #[test]
    fn row_sums_mark_boundary_cells(dom in (2usize..=3).prop_flat_map(small_mask)) {
        let op = SparseOperator::assemble(&dom).unwrap();
        let d = dom.dimension();
        for i in 0..op.order() {
            let sum: f64 = op.row(i).map(|(_, v)| v).sum();
            let cell = op.cell_of_row(i);
            let mut idx = vec![0; d];
            let mut rest = cell;
            for (a, slot) in idx.iter_mut().enumerate() {
                *slot = rest % dom.extents()[a];
                rest /= dom.extents()[a];
            }
            let touches = (0..d).any(|a| {
                [-1i64, 1].iter().any(|&step| {
                    let j = idx[a] as i64 + step;
                    if j < 0 || j >= dom.extents()[a] as i64 {
                        return true;
                    }
                    let mut n = idx.clone();
                    n[a] = j as usize;
                    !dom.get(&n)
                })
            });
            let tiny = 1e-12 * op.norm_bound();
            prop_assert!(sum > -tiny);
            prop_assert_eq!(sum > tiny, touches);
        }
    }

    #[test]
    fn solver_is_deterministic(dom in small_mask(2)) {
        let op = SparseOperator::assemble(&dom).unwrap();
        let opts = SolverOptions { dense_threshold: 0, ..SolverOptions::default() };
        let n = op.order().min(3);
        let a = smallest_eigenvalues(&op, n, &opts).unwrap();
        let b = smallest_eigenvalues(&op, n, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn wesd_is_a_pseudometric(
        (a, b, c) in (1usize..30).prop_flat_map(|n| (sorted_spectrum(n), sorted_spectrum(n), sorted_spectrum(n))),
        p in 1.01f64..5.0,
    ) {
        let n = a.len();
        let d = |x: &Spectrum, y: &Spectrum| wesd(x, y, p, n).unwrap().value;
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert_eq!(d(&a, &b).to_bits(), d(&b, &a).to_bits());
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn kernel_is_monotone(b in 0.01f64..100.0, gap in 1e-6f64..100.0, step in 1e-6f64..10.0) {
        let a = b + gap;
        prop_assert!(wesd_kernel(a + step, b) >= wesd_kernel(a, b));
        prop_assert!(wesd_kernel(a, b - step.min(0.99 * b)) >= wesd_kernel(a, b));
    }

    #[test]
    fn partial_sums_grow_within_bound(a in rectangle_spectrum(80), b in rectangle_spectrum(80), p in 1.05f64..4.0) {
        let coef = normalisation_factor(&a, &b, p).unwrap();
        let mut prev = 0.0;
        for n in 1..=80 {
            let cur = wesd(&a, &b, p, n).unwrap().value;
            prop_assert!(cur >= prev);
            let increment = cur.powf(p) - prev.powf(p);
            let bound = coef.k * (1.0 / n as f64).powf(p);
            prop_assert!(increment <= bound * (1.0 + 1e-12), "n={} inc={} bound={}", n, increment, bound);
            prev = cur;
        }
    }

    #[test]
    fn larger_exponent_suppresses_high_modes(a in rectangle_spectrum(400), b in rectangle_spectrum(400), q in 1.05f64..3.0, extra in 0.0f64..3.0, n in 1usize..5) {
        let p = q + extra;
        let terms: Vec<f64> = a.eigenvalues.iter().zip(&b.eigenvalues).map(|(x, y)| wesd_kernel(*x, *y)).collect();
        prop_assume!(terms[n - 1] > 0.0);
        // Find M from which on the m-th term never exceeds the n-th one.
        let last_above = terms.iter().rposition(|&t| t > terms[n - 1]).unwrap_or(n - 1);
        prop_assume!(last_above + 1 < terms.len());
        for t in &terms[last_above + 1..] {
            let r = t / terms[n - 1];
            prop_assert!(r.powf(p) <= r.powf(q));
        }
    }

    #[test]
    fn nwesd_in_unit_interval_and_tails_bounded(a in rectangle_spectrum(300), b in rectangle_spectrum(300), p in 1.05f64..4.0, n in 3usize..100) {
        let full = nwesd(&a, &b, p, 300).unwrap().value;
        let part = nwesd(&a, &b, p, n).unwrap();
        prop_assert!((0.0..1.0).contains(&full));
        prop_assert!((0.0..1.0).contains(&part.value));
        let coef = normalisation_factor(&a, &b, p).unwrap();
        let gap = wesd(&a, &b, p, 300).unwrap().value - wesd(&a, &b, p, n).unwrap().value;
        prop_assert!(gap <= tail_bound_from(&coef, n).unwrap());
        let (_, nb) = truncation_bounds(&a, &b, p, n).unwrap();
        prop_assert!(residual_ratio(n, p, 2).unwrap() >= nb);
    }

    #[test]
    fn embedding_follows_permutations(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..9), seed in any::<u64>()) {
        let n = pts.len();
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let values = (0..n * n).map(|k| {
            let (a, b) = (pts[k / n], pts[k % n]);
            (a.0 - b.0).hypot(a.1 - b.1)
        }).collect();
        let m = AffinityMatrix::new(ids, values, "e").unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let e = isomap(&m, n - 1, 2, 1).unwrap();
        let f = isomap(&m.permuted(&order).unwrap(), n - 1, 2, 1).unwrap();
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        // Compare pairwise embedded distances, which are blind to axis signs.
        for a in 0..n {
            for b in 0..n {
                let de = dist(&e.coords[order[a]], &e.coords[order[b]]);
                let df = dist(&f.coords[a], &f.coords[b]);
                prop_assert!((de - df).abs() <= 1e-8 * de.max(1.0));
            }
        }
    }

    #[test]
    fn retrieval_ignores_order_and_monotone_maps(
        raw in prop::collection::vec(0.0f64..1.0, 28),
        classes in prop::collection::vec(0usize..3, 8),
        seed in any::<u64>(),
    ) {
        let n = 8;
        let mut values = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                // Distinct distances so that no ties arise.
                values[i * n + j] = raw[k] + k as f64;
                values[j * n + i] = values[i * n + j];
                k += 1;
            }
        }
        let labels: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
        prop_assume!(labels.iter().any(|l| labels.iter().filter(|m| *m == l).count() > 1));
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let m = AffinityMatrix::new(ids.clone(), values.clone(), "r").unwrap();
        let base = evaluate(&LabeledDataset::new(m.clone(), labels.clone()).unwrap(), 1).unwrap();

        let mapped: Vec<f64> = values.iter().map(|v| v.powi(3) + v.exp() - 1.0).collect();
        let mm = AffinityMatrix::new(ids, mapped, "r").unwrap();
        let monotone = evaluate(&LabeledDataset::new(mm, labels.clone()).unwrap(), 1).unwrap();
        prop_assert_eq!(&base, &monotone);

        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left((seed % n as u64) as usize);
        order.swap(0, n - 1);
        let shuffled = m.permuted(&order).unwrap();
        let shuffled_labels = order.iter().map(|&i| labels[i].clone()).collect();
        let s = evaluate(&LabeledDataset::new(shuffled, shuffled_labels).unwrap(), 2).unwrap();
        for (x, y) in [(base.nn, s.nn), (base.ft, s.ft), (base.st, s.st), (base.e, s.e), (base.dcg, s.dcg)] {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn affinity_csv_round_trips(vals in prop::collection::vec(1e-9f64..1e9, 6)) {
        let n = 4;
        let mut values = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                values[i * n + j] = vals[k];
                values[j * n + i] = vals[k];
                k += 1;
            }
        }
        let m = AffinityMatrix::new((0..n).map(|i| format!("x{i}")).collect(), values, "w").unwrap();
        let back = AffinityMatrix::from_csv(&m.to_csv(), Path::new("m.csv")).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m.get(i, j).to_bits(), back.get(i, j).to_bits());
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn printed_truncation_bound_can_be_exceeded() {
    // Pair with very different volumes: the partial sum is far below its
    // admissible maximum, so the gap exceeds the partial-sum-based bound.
    let a = Spectrum::analytic_box(&[0.3, 0.3], 300).unwrap();
    let b = Spectrum::analytic_box(&[0.3, 2.4], 300).unwrap();
    let p = 3.098361824548918;
    let gap = wesd(&a, &b, p, 300).unwrap().value - wesd(&a, &b, p, 3).unwrap().value;
    let (printed, _) = truncation_bounds(&a, &b, p, 3).unwrap();
    let coef = normalisation_factor(&a, &b, p).unwrap();
    assert!(gap > 2.0 * printed, "gap {gap} printed {printed}");
    assert!(gap <= tail_bound_from(&coef, 3).unwrap());
}
