use proptest::prelude::*;
use tenscert_core::rng::{gaussian_vec, rng_from_seed};
use tenscert_core::{
    coherence_profile, dual_witness, fiber_subspaces, projector_rank, sample_omega, spectral_norm_hopm, volume,
    Dims, HopmOptions, IndexTriple, OrthoDecomposition, ProjectorKind, Tensor3, DEFAULT_RANK_TOL,
};

fn random_tensor(dims: Dims, seed: u64) -> Tensor3 {
    let mut rng = rng_from_seed(seed);
    Tensor3::from_vec(dims, gaussian_vec(&mut rng, volume(dims))).unwrap()
}

fn dims_upto(max: usize) -> impl Strategy<Value = Dims> {
    (1..=max, 1..=max, 1..=max).prop_map(|(a, b, c)| [a, b, c])
}

fn decomposable(dims: Dims, r: usize, seed: u64) -> OrthoDecomposition {
    let mut rng = rng_from_seed(seed);
    let weights = (0..r).map(|i| 1.0 + i as f64 * 0.5).collect();
    OrthoDecomposition::random(dims, weights, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_chain(dims in dims_upto(6), seed in any::<u64>()) {
        let x = random_tensor(dims, seed);
        let spec = spectral_norm_hopm(&x, &HopmOptions::default()).unwrap().value;
        prop_assert!(x.max_norm() <= spec + 1e-12);
        prop_assert!(spec <= x.hs_norm() + 1e-12);
    }

    #[test]
    fn projectors_decompose_identity(dims in dims_upto(5), seed in any::<u64>()) {
        let t = random_tensor(dims, seed);
        let x = random_tensor(dims, seed ^ 0xABCD);
        let s = fiber_subspaces(&t, DEFAULT_RANK_TOL).unwrap();
        let q = s.apply(ProjectorKind::Q, &x).unwrap();
        let qp = s.apply(ProjectorKind::Qperp, &x).unwrap();
        prop_assert!(q.add(&qp).unwrap().sub(&x).unwrap().hs_norm() <= 1e-10 * x.hs_norm());
        prop_assert!(s.apply(ProjectorKind::Q, &q).unwrap().sub(&q).unwrap().hs_norm() <= 1e-10 * x.hs_norm());
        prop_assert!(s.project_q(&x).unwrap().sub(&q).unwrap().hs_norm() <= 1e-10 * x.hs_norm());
        let parts: Vec<Tensor3> = ProjectorKind::Q_PARTS.iter().map(|&k| s.apply(k, &x).unwrap()).collect();
        for j in 0..4 {
            for k in j + 1..4 {
                prop_assert!(parts[j].inner(&parts[k]).unwrap().abs() <= 1e-9 * x.hs_norm().powi(2));
            }
        }
    }

    #[test]
    fn sample_omega_is_a_subset_of_the_grid(dims in dims_upto(5), frac in 0.01f64..=1.0, seed in any::<u64>()) {
        let n = ((frac * volume(dims) as f64).ceil() as usize).max(1);
        let omega = sample_omega(dims, n, seed).unwrap();
        prop_assert_eq!(omega.len(), n);
        prop_assert!(omega.offsets().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(omega.indices().all(|i| i.in_range(dims)));
    }

    #[test]
    fn witness_has_unit_spectral_norm(dims in dims_upto(5), seed in any::<u64>()) {
        let r = dims.iter().copied().min().unwrap().min(2);
        let d = decomposable(dims, r, seed);
        let w = dual_witness(&d);
        let spec = spectral_norm_hopm(&w, &HopmOptions::default()).unwrap().value;
        prop_assert!((spec - 1.0).abs() < 1e-8);
        prop_assert!((w.inner(&d.to_tensor()).unwrap() - d.weights().iter().sum::<f64>()).abs() < 1e-9);
    }
}

#[test]
fn projector_rank_is_the_trace_of_q() {
    for d1 in 1..=4 {
        for d2 in 1..=4 {
            for d3 in 1..=4 {
                let dims = [d1, d2, d3];
                let r = d1.min(d2).min(d3).min(2);
                let s = decomposable(dims, r, (d1 * 100 + d2 * 10 + d3) as u64).subspaces();
                let mut trace = 0.0;
                for off in 0..volume(dims) {
                    let e = Tensor3::basis(dims, IndexTriple::from_offset(off, dims)).unwrap();
                    trace += s.project_q(&e).unwrap().inner(&e).unwrap();
                }
                assert!((trace - projector_rank(&s) as f64).abs() < 1e-8, "{dims:?}");
            }
        }
    }
}

#[test]
fn lemma2_entry_bound() {
    for seed in 0..20u64 {
        let dims = [3 + seed as usize % 4, 4 + seed as usize % 3, 3 + seed as usize % 5];
        let d = decomposable(dims, 1 + seed as usize % 2, seed);
        let s = d.subspaces();
        let prof = coherence_profile(&s, &dual_witness(&d)).unwrap();
        let dsum = (dims[0] + dims[1] + dims[2]) as f64;
        let bound = prof.rbar * prof.rbar * dsum * prof.mu * prof.mu / volume(dims) as f64;
        for off in 0..volume(dims) {
            let e = Tensor3::basis(dims, IndexTriple::from_offset(off, dims)).unwrap();
            let q = s.project_q(&e).unwrap().hs_norm();
            assert!(q * q <= bound + 1e-8, "seed {seed}: {} > {bound}", q * q);
        }
    }
}

/// Brute-force maximum of `⟨X, u⊗v⊗w⟩` over a grid on the three unit circles.
fn circle_grid_max(x: &Tensor3, steps: usize) -> f64 {
    let pts: Vec<[f64; 2]> = (0..steps)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / steps as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let v = x.values();
    let mut best: f64 = 0.0;
    for u in &pts {
        let m: Vec<f64> = (0..4).map(|bc| u[0] * v[bc] + u[1] * v[4 + bc]).collect();
        for w in &pts {
            let p0 = m[0] * w[0] + m[1] * w[1];
            let p1 = m[2] * w[0] + m[3] * w[1];
            // Best v for fixed (u, w) is the normalised (p0, p1).
            best = best.max((p0 * p0 + p1 * p1).sqrt());
        }
    }
    best
}

#[test]
fn hopm_matches_grid_oracle_on_2x2x2() {
    for seed in 0..40u64 {
        let x = random_tensor([2, 2, 2], 1000 + seed);
        let grid = circle_grid_max(&x, 2000);
        let hopm = spectral_norm_hopm(&x, &HopmOptions::default()).unwrap().value;
        assert!(hopm >= grid - 1e-9, "seed {seed}: hopm {hopm} < grid {grid}");
        assert!(hopm <= grid + 1e-5 * x.hs_norm(), "seed {seed}: hopm {hopm} > grid {grid}");
    }
}
