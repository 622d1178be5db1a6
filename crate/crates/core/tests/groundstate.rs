mod common;

use common::*;
use dicke_mps::ed::{ed_spectrum, DenseSystem};
use dicke_mps::fit::{fit_sum, FitOptions};
use dicke_mps::groundstate::{
    boltzmann, energy_variance, excited_states, ground_state, parity_eigenstate, thermal_average, DmrgConfig, SolveStatus,
};
use dicke_mps::model::ModelParams;
use dicke_mps::mpo::{build_dicke_ising_mpo, MpOperator};
use dicke_mps::observables::{magnetization, parity_expectation, photon_stats, Axis};

fn cfg() -> DmrgConfig {
    DmrgConfig::default()
}

#[test]
fn decoupled_paramagnet() {
    let p = ModelParams::new(1.0, 0.3, 0.0, 0.0, 4).unwrap().with_n_max(3);
    let gs = ground_state(&build_dicke_ising_mpo::<f64>(&p).unwrap(), None, &cfg()).unwrap();
    assert!((gs.report.energy + 1.2).abs() < 1e-10);
    assert!(photon_stats(&gs.state).unwrap().0.abs() < 1e-10);
    assert!(magnetization(&gs.state, Axis::Z).unwrap().iter().all(|m| (m - 1.0).abs() < 1e-8));
}

#[test]
fn classical_ising_limit() {
    let p = ModelParams::new(1.0, 0.0, 0.6, 0.0, 5).unwrap().with_n_max(2);
    let gs = ground_state(&build_dicke_ising_mpo::<f64>(&p).unwrap(), None, &cfg()).unwrap();
    assert!((gs.report.energy + 0.6 * 4.0).abs() < 1e-9, "{}", gs.report.energy);
}

#[test]
fn generic_point_matches_dense_diagonalization() {
    let p = ModelParams::new(1.0, 0.2, 0.3, 0.49, 6).unwrap().with_n_max(8);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 1).unwrap();
    let gs = ground_state(&build_dicke_ising_mpo::<f64>(&p).unwrap(), None, &cfg()).unwrap();
    let r = &gs.report;
    assert_eq!(r.status, SolveStatus::Converged);
    assert!((r.energy - spec.energies[0]).abs() < 1e-9 * spec.energies[0].abs());
    let osc = sys.oscillator_state(&spec.states[0]).unwrap();
    let (n, var) = photon_stats(&gs.state).unwrap();
    let (n_ed, var_ed) = osc.photon_stats();
    assert!((n - n_ed).abs() < 1e-7 && (var - var_ed).abs() < 1e-7);
    assert!((parity_expectation(&gs.state).unwrap() - spec.parities[0]).abs() < 1e-7);
    for (a, b) in magnetization(&gs.state, Axis::Z).unwrap().iter().zip(sys.sigma_z(&spec.states[0])) {
        assert!((a - b).abs() < 1e-7);
    }
    assert!(r.energy_variance >= -1e-9);
    assert!(r.top_fock_population < 1e-4);
}

#[test]
fn sweep_energies_do_not_increase() {
    let p = ModelParams::new(1.0, 0.25, 0.3, 0.6, 6).unwrap().with_n_max(8);
    let gs = ground_state(&build_dicke_ising_mpo::<f64>(&p).unwrap(), None, &DmrgConfig { min_sweeps: 4, ..cfg() }).unwrap();
    let e = &gs.report.sweep_energies;
    for w in e.windows(2) {
        assert!(w[1] <= w[0] + 1e-10 * w[0].abs(), "{e:?}");
    }
}

#[test]
fn converged_states_have_sharp_parity() {
    let mut r = rng(77);
    for _ in 0..3 {
        let (_, h, j, g) = random_params(&mut r);
        let p = ModelParams::new(1.0, h, j, g * 0.6, 4).unwrap().with_n_max(8);
        let gs = ground_state(&build_dicke_ising_mpo::<f64>(&p).unwrap(), None, &cfg()).unwrap();
        assert!(gs.report.converged());
        assert!(gs.report.parity.abs() >= 1.0 - 1e-6, "{:?}", gs.report);
    }
}

#[test]
fn free_spin_level_ordering() {
    // L = 2: one flip (twice), two flips at 4h, one photon at ω
    let p = ModelParams::new(1.0, 0.2, 0.0, 0.0, 2).unwrap().with_n_max(3);
    let set = excited_states(&build_dicke_ising_mpo::<f64>(&p).unwrap(), 4, &cfg(), 1.0).unwrap();
    let gaps = set.gaps();
    for (g, want) in gaps.iter().zip([0.4, 0.4, 0.8]) {
        assert!((g - want).abs() < 1e-8, "{gaps:?}");
    }
    let p = ModelParams::new(1.0, 0.7, 0.0, 0.0, 2).unwrap().with_n_max(3);
    let set = excited_states(&build_dicke_ising_mpo::<f64>(&p).unwrap(), 2, &cfg(), 1.0).unwrap();
    assert!((set.gaps()[0] - 1.0).abs() < 1e-8, "{:?}", set.gaps());
}

#[test]
fn three_lowest_levels_match_dense() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 6).unwrap().with_n_max(8);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 3).unwrap();
    let set = excited_states(&build_dicke_ising_mpo::<f64>(&p).unwrap(), 3, &cfg(), p.energy_scale()).unwrap();
    for k in 0..3 {
        assert!((set.energies[k] - spec.energies[k]).abs() < 1e-8, "{k}");
    }
    assert!(set.max_overlap() < 1e-6);
    assert!(set.energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ising_corner_is_degenerate_and_parity_labelled() {
    let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, 4).unwrap().with_n_max(2);
    let set = excited_states(&build_dicke_ising_mpo::<f64>(&p).unwrap(), 2, &cfg(), 1.0).unwrap();
    assert!(set.gaps()[0] < 1e-8);
    let mut ps = set.parities.clone();
    ps.sort_by(f64::total_cmp);
    assert!((ps[0] + 1.0).abs() < 1e-6 && (ps[1] - 1.0).abs() < 1e-6, "{ps:?}");
}

#[test]
fn thermal_limits() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 4).unwrap().with_n_max(8);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let set = excited_states(&h, 2, &cfg(), p.energy_scale()).unwrap();
    let n_op = MpOperator::<f64>::number(&p.site_specs()).unwrap();
    let cold = thermal_average(&set, 1e-8, &n_op).unwrap();
    let n0 = photon_stats(&set.states[0]).unwrap().0;
    assert!((cold.value - n0).abs() < 1e-10);
    let even = boltzmann(&[-1.0, -1.0], &[2.0, 4.0], 0.3);
    assert!((even.value - 3.0).abs() < 1e-15);
    assert!(thermal_average(&set, 0.0, &n_op).is_err());
}

#[test]
fn thermal_average_matches_dense_window() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 6).unwrap().with_n_max(8);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 4).unwrap();
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let set = excited_states(&h, 4, &cfg(), p.energy_scale()).unwrap();
    let n_op = MpOperator::<f64>::number(&p.site_specs()).unwrap();
    let t = 0.05;
    let got = thermal_average(&set, t, &n_op).unwrap();
    let ns: Vec<f64> = spec.states.iter().map(|s| sys.oscillator_state(s).unwrap().photon_stats().0).collect();
    let e0 = spec.energies[0];
    let w: Vec<f64> = spec.energies.iter().map(|e| (-(e - e0) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    let want: f64 = w.iter().zip(&ns).map(|(a, b)| a * b).sum::<f64>() / z;
    assert!((got.value - want).abs() < 1e-6, "{} vs {want}", got.value);
}

#[test]
fn variance_is_small_only_for_eigenstates() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 3).unwrap().with_n_max(5);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let psi = random_state(&p, 3, 3);
    let (e, var) = energy_variance(&psi, &h).unwrap();
    let hd = hamiltonian(&p);
    let v = vec_of(&psi);
    let e_d = expect(&hd, &v).re;
    let var_d = expect(&(&hd * &hd), &v).re - e_d * e_d;
    assert!((e - e_d).abs() < 1e-11 && (var - var_d).abs() < 1e-10);
    assert!(var > 1e-3);
}

#[test]
fn warm_start_gives_the_same_answer() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 5).unwrap().with_n_max(8);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let cold = ground_state(&h, None, &cfg()).unwrap();
    let q = ModelParams { h: 0.31, ..p };
    let h2 = build_dicke_ising_mpo::<f64>(&q).unwrap();
    let warm = ground_state(&h2, Some(&cold.state), &cfg()).unwrap();
    let cold2 = ground_state(&h2, None, &cfg()).unwrap();
    assert!((warm.report.energy - cold2.report.energy).abs() < 1e-9);
    let (n1, _) = photon_stats(&warm.state).unwrap();
    let (n2, _) = photon_stats(&cold2.state).unwrap();
    assert!((n1 - n2).abs() < 1e-6);
}

#[test]
fn same_seed_is_deterministic() {
    let p = ModelParams::new(1.0, 0.3, 0.25, 0.45, 4).unwrap().with_n_max(6);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let a = ground_state(&h, None, &cfg()).unwrap();
    let b = ground_state(&h, None, &cfg()).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.state, b.state);
}

#[test]
fn decoupled_cavity_photon_level_is_found() {
    // g = 0 conserves the photon number; the third level is |1⟩ on top of
    // the degenerate Ising pair, below the first domain wall at 2J
    let p = ModelParams::new(1.0, 0.0, 1.0, 0.0, 5).unwrap().with_n_max(3);
    let set = excited_states(&build_dicke_ising_mpo::<f64>(&p).unwrap(), 3, &cfg(), p.energy_scale()).unwrap();
    let gaps = set.gaps();
    assert!(gaps[0] < 1e-8 && (gaps[1] - 1.0).abs() < 1e-8, "{gaps:?}");
}

#[test]
fn parity_projection_recovers_the_sharp_ground_state() {
    let p = ModelParams::new(1.0, 0.2, 0.3, 1.2, 4).unwrap().with_n_max(14);
    let h = build_dicke_ising_mpo::<f64>(&p).unwrap();
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 2).unwrap();
    assert!(spec.parities[0] * spec.parities[1] < 0.0);
    let set = excited_states(&h, 2, &cfg(), p.energy_scale()).unwrap();
    let mix = fit_sum(&[c(0.6), c(0.8)], &[&set.states[0], &set.states[1]], &FitOptions::default()).unwrap().state;
    let mut gs = ground_state(&h, None, &cfg()).unwrap();
    gs.report.parity = parity_expectation(&mix).unwrap();
    gs.state = mix;
    assert!(gs.report.parity.abs() < 0.5);
    let out = parity_eigenstate(gs, &h, &cfg().spec, 1e-10).unwrap();
    assert!((out.report.energy - spec.energies[0]).abs() < 1e-9 * spec.energies[0].abs());
    assert!((out.report.parity - spec.parities[0]).abs() < 1e-8, "{}", out.report.parity);
    assert_eq!(out.report.status, SolveStatus::Converged);
}
