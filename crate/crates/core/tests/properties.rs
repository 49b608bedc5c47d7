use num_complex::Complex;
use photonstat_core::counting::{moment_stats, photon_stats, CutoffPolicy, Method};
use photonstat_core::liouville::{jump_superop, vectorize, DriveSpec, Envelope, InitialState, Operator2, Topology};
use photonstat_core::propagator::{default_step, propagator_between, segment_propagators};
use photonstat_core::sweeps::{linspace, maximize_p1, MaximizeOptions};
use photonstat_core::trajectories::sample_trajectories;
use proptest::prelude::*;

fn topology() -> impl Strategy<Value = Topology<f64>> {
    (0usize..5, prop_oneof![Just(0.0), -2.0..2.0f64]).prop_map(|(k, detuning)| match k {
        0 => Topology::SingleLine { detuning },
        k => Topology::TwoLine { ratio: [0.01, 0.1, 0.5, 1.0][k - 1], detuning },
    })
}

fn spec() -> impl Strategy<Value = DriveSpec<f64>> {
    (topology(), -3.0..1.6f64, 0.0..100.0f64, any::<bool>()).prop_map(|(topo, log_t, n, excited)| {
        let initial = if excited { InitialState::Excited } else { InitialState::Ground };
        DriveSpec::square(topo, log_t.exp(), n).unwrap().with_initial(initial)
    })
}

fn sampled_spec() -> impl Strategy<Value = DriveSpec<f64>> {
    (topology(), 0.05..2.0f64, prop::collection::vec(0.0..400.0f64, 3..7)).prop_map(|(topo, width, fluxes)| {
        let last = (fluxes.len() - 1) as f64;
        let samples = fluxes.iter().enumerate().map(|(i, &y)| (width * i as f64 / last, y)).collect();
        DriveSpec::new(Envelope::Sampled { samples }, topo).unwrap()
    })
}

fn random_matrix(v: &[f64]) -> Operator2<f64> {
    Operator2::new([
        [Complex::new(v[0], v[1]), Complex::new(v[2], v[3])],
        [Complex::new(v[4], v[5]), Complex::new(v[6], v[7])],
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn segments_preserve_trace(spec in prop_oneof![spec(), sampled_spec()], v in prop::collection::vec(-1.0..1.0f64, 8)) {
        let grid = segment_propagators(&spec, default_step(&spec)).unwrap();
        let x = vectorize(&random_matrix(&v));
        let tr = x[0] + x[3];
        for seg in grid.segments() {
            let y = seg.apply_vec(&x);
            prop_assert!(((y[0] + y[3]) - tr).norm() < 1e-9);
        }
    }

    #[test]
    fn segment_products_match_direct_propagators(spec in prop_oneof![spec(), sampled_spec()], j in 0usize..40, len in 1usize..12) {
        let grid = segment_propagators(&spec, default_step(&spec)).unwrap();
        let times = grid.times();
        let j = j.min(times.len() - 2);
        let end = (j + len).min(times.len() - 1);
        let mut product = grid.segments()[j].clone();
        for seg in &grid.segments()[j + 1..end] {
            product = seg.compose(&product);
        }
        let direct = propagator_between(&spec, times[j], times[end]).unwrap();
        prop_assert!(product.max_abs_diff(&direct) < 1e-8);
        for (i, seg) in grid.segments().iter().enumerate() {
            let next = seg.apply(grid.states()[i].as_op());
            prop_assert!(next.max_abs_diff(grid.states()[i + 1].as_op()) < 1e-10);
        }
    }

    #[test]
    fn photon_stats_invariants(spec in prop_oneof![spec(), sampled_spec()]) {
        for method in [Method::MomentInversion, Method::JumpCounting] {
            let stats = photon_stats(&spec, method, CutoffPolicy::default()).unwrap();
            prop_assert!((stats.total() - 1.0).abs() <= 1e-6);
            prop_assert!(stats.probabilities.iter().all(|&p| p >= 0.0));
            prop_assert!(stats.moment_round_trip_error() <= 1e-8);
        }
    }

    #[test]
    fn raising_the_cutoff_stays_within_the_tail_bound(spec in spec()) {
        let grid = segment_propagators(&spec, default_step(&spec)).unwrap();
        let jump = jump_superop(&spec);
        let base = moment_stats(&grid, &jump, CutoffPolicy::default()).unwrap();
        let more = moment_stats(&grid, &jump, CutoffPolicy::fixed(base.cutoff_k + 4)).unwrap();
        for n in 0..=base.cutoff_k {
            // 1e-10: roundoff of the alternating inversion sum
            prop_assert!((base.p(n) - more.p(n)).abs() <= base.tail_bound + 1e-10,
                "n = {n}: {} vs {} (tail {})", base.p(n), more.p(n), base.tail_bound);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trajectory_mean_matches_first_moment(spec in spec(), seed in any::<u64>()) {
        let n_traj = 20_000;
        let traj = sample_trajectories(&spec, n_traj, seed).unwrap();
        prop_assert_eq!(traj.counts.iter().sum::<u64>(), n_traj);
        let stats = photon_stats(&spec, Method::MomentInversion, CutoffPolicy::default()).unwrap();
        let se = traj.mean_stderr().max(1.0 / n_traj as f64);
        prop_assert!((traj.mean_monitored() - stats.n(1)).abs() <= 4.0 * se,
            "mean {} vs N1 {} (se {se})", traj.mean_monitored(), stats.n(1));
    }

    #[test]
    fn maximizer_beats_every_scanned_point(topo in topology(), log_t in -3.0..0.5f64) {
        let topo = match topo {
            Topology::SingleLine { .. } => Topology::single(),
            Topology::TwoLine { ratio, .. } => Topology::two_line(ratio),
        };
        let width = log_t.exp();
        let template = DriveSpec::<f64>::square(topo, width, 0.0).unwrap();
        let opts = MaximizeOptions::default();
        let range = opts.photon_range(&topo, width);
        let policy = CutoffPolicy::default();
        let best = maximize_p1(&template, range, opts, policy).unwrap();
        for n in linspace(range.0, range.1, opts.coarse_points) {
            let p1 = photon_stats(&template.with_photons(n).unwrap(), Method::MomentInversion, policy).unwrap().p(1);
            prop_assert!(best.stats.p(1) >= p1);
        }
    }
}
