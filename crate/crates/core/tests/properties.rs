use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hydrostat_core::config::SimConfigFile;
use hydrostat_core::diagnostics::update_norms;
use hydrostat_core::domain::{eval_on_grid, l2_norm_vec, HVecField, ScalarField};
use hydrostat_core::io::{read_snapshot, write_diagnostics_csv, write_snapshot, CSV_HEADER};
use hydrostat_core::make_grid;
use hydrostat_core::noise::check_assumptions;
use hydrostat_core::noise::BrownianDriver;
use hydrostat_core::noise::NoiseBasis;
use hydrostat_core::operators::hydrostatic_project;
use hydrostat_core::stepper::SimState;
use hydrostat_core::verify::random_smooth_field;

fn grid_dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (prop::sample::select(vec![4usize, 8]), prop::sample::select(vec![4usize, 8]), 3usize..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshot_round_trip((nx, ny, nz) in grid_dims(), h in 0.1f64..4.0, t in 0.0f64..10.0, seed in any::<u64>()) {
        let g = make_grid(nx, ny, nz, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_smooth_field(&g, &mut rng).unwrap();
        let theta = v.c1().mul(v.c2());
        let mut s = SimState::new(v, theta, 0).unwrap();
        s.t = t;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        let back = read_snapshot(&mut &buf[..]).unwrap();
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
        prop_assert_eq!((back.grid().nx(), back.grid().ny(), back.grid().nz()), (nx, ny, nz));
        prop_assert_eq!(back.grid().h().to_bits(), h.to_bits());
        prop_assert_eq!(back.v.c1().values(), s.v.c1().values());
        prop_assert_eq!(back.v.c2().values(), s.v.c2().values());
        prop_assert_eq!(back.theta.values(), s.theta.values());
    }

    #[test]
    fn projection_is_idempotent_and_contracting((nx, ny, nz) in grid_dims(), seed in any::<u64>()) {
        let g = make_grid(nx, ny, nz, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_smooth_field(&g, &mut rng).unwrap();
        let p = hydrostatic_project(&f);
        let pp = hydrostatic_project(&p);
        let nf = l2_norm_vec(&f);
        prop_assert!(l2_norm_vec(&pp.sub(&p)) <= 1e-12 * nf);
        prop_assert!(l2_norm_vec(&p) <= nf * (1.0 + 1e-12));
    }

    #[test]
    fn nu_scales_quadratically(a in -1.5f64..1.5, b in -1.5f64..1.5, lambda in 0.1f64..3.0) {
        prop_assume!(a.abs() + b.abs() > 1e-3);
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let basis = NoiseBasis::constant(&g, &[[a, b, 0.0]], &[[0.0, 0.0, 0.0]]).unwrap();
        let nu = check_assumptions(&basis, 0.1).nu_phi;
        prop_assert!((nu - (a * a + b * b)).abs() <= 1e-12 * nu.max(1.0));
        let scaled = check_assumptions(&basis.scaled(lambda), 0.1).nu_phi;
        prop_assert!((scaled - lambda * lambda * nu).abs() <= 1e-12 * scaled.max(1.0));
    }

    #[test]
    fn driver_is_a_pure_function(seed in any::<u64>(), traj in 0u64..1000, step in 0u64..100_000, n in 1usize..8) {
        let d = BrownianDriver::new(seed, n, 1e-3).unwrap();
        let a = d.sample_increments(traj, step);
        let b = BrownianDriver::new(seed, n, 1e-3).unwrap().sample_increments(traj, step);
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(&a, &b);
        for (m, x) in a.iter().enumerate() {
            prop_assert!(x.is_finite());
            prop_assert_eq!(x.to_bits(), d.increment(traj, step, m as u64).to_bits());
        }
    }

    #[test]
    fn csv_rows_have_header_width(n_rows in 1usize..6, amp in -5.0f64..5.0) {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let th = eval_on_grid(&g, |x1, _, x3| amp * x1.cos() * (1.0 + x3)).unwrap();
        let s = SimState::new(HVecField::zeros(&g), th, 0).unwrap();
        let mut records = Vec::new();
        let mut prev = None;
        for _ in 0..n_rows {
            let r = update_norms(&s, prev.as_ref(), 0.1, 0.0);
            records.push(r);
            prev = Some(r);
        }
        let mut out = Vec::new();
        write_diagnostics_csv(&mut out, &records).unwrap();
        let text = String::from_utf8(out).unwrap();
        let width = CSV_HEADER.split(',').count();
        prop_assert_eq!(text.lines().count(), n_rows + 1);
        for line in text.lines().skip(1) {
            prop_assert_eq!(line.split(',').count(), width);
            for field in line.split(',') {
                prop_assert!(field.parse::<f64>().is_ok());
            }
        }
    }

    #[test]
    fn running_norm_is_monotone(amps in prop::collection::vec(0.0f64..3.0, 2..8)) {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let mut prev = None;
        let mut last = (0.0, 0.0);
        for a in amps {
            let th = eval_on_grid(&g, |x1, x2, _| a * (x1 + x2).sin()).unwrap();
            let s = SimState::new(HVecField::zeros(&g), th, 0).unwrap();
            let r = update_norms(&s, prev.as_ref(), 0.05, 0.0);
            prop_assert!(r.n0_theta >= last.0);
            prop_assert!(r.n1_theta >= last.1);
            last = (r.n0_theta, r.n1_theta);
            prev = Some(r);
        }
    }

    #[test]
    fn config_grid_values_round_trip(nx in prop::sample::select(vec![4usize, 8, 16]), nz in 3usize..40, dt in 1e-5f64..1e-1, n_steps in 1usize..10_000) {
        let text = format!("[grid]\nnx = {nx}\nny = {nx}\nnz = {nz}\n[time]\ndt = {dt}\nn_steps = {n_steps}\n");
        let c = SimConfigFile::parse(&text).unwrap();
        prop_assert_eq!((c.grid.nx, c.grid.nz), (nx, nz));
        prop_assert_eq!(c.time.dt.to_bits(), dt.to_bits());
        prop_assert_eq!(c.time.n_steps as usize, n_steps);
    }

    #[test]
    fn unknown_keys_are_rejected(key in "[a-z]{3,10}") {
        prop_assume!(!["nx", "ny", "nz"].contains(&key.as_str()));
        let text = format!("[grid]\nnx = 8\n{key} = 1\n");
        prop_assert!(SimConfigFile::parse(&text).is_err());
    }
}

#[test]
fn zero_state_has_zero_norms() {
    let g = make_grid(8, 8, 5, 1.0).unwrap();
    let s = SimState::new(HVecField::zeros(&g), ScalarField::zeros(&g), 0).unwrap();
    let r = update_norms(&s, None, 0.0, 0.0);
    assert_eq!([r.n0_v, r.n1_v, r.n0_theta, r.n1_theta], [0.0; 4]);
}
