mod common;

use common::*;
use dicke_mps::ed::*;
use dicke_mps::model::ModelParams;
use dicke_mps::trajectory::ensemble_statistics;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn spins_up_with(osc: Vec<Complex64>, l: usize) -> Vec<Complex64> {
    // oscillator at site 0, all spins |↑⟩ (index 0)
    let stride = 1 << l;
    let mut v = vec![c(0.0); osc.len() * stride];
    for (n, a) in osc.into_iter().enumerate() {
        v[n * stride] = a;
    }
    v
}

#[test]
fn dense_hamiltonian_matches_kron_and_is_hermitian() {
    let p = ModelParams::new(1.1, 0.3, 0.45, 0.8, 4).unwrap().with_n_max(3).with_osc_site(2);
    let sys = DenseSystem::new(&p).unwrap();
    assert!(sys.hermiticity_defect() < 1e-12);
    let oracle = hamiltonian(&p);
    let d = sys.hamiltonian().map(|x| c(x)) - oracle;
    assert!(d.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn size_limits_are_enforced() {
    assert!(DenseSystem::new(&ModelParams::new(1.0, 0.1, 0.1, 0.1, 9).unwrap().with_n_max(2)).is_err());
    assert!(DenseSystem::new(&ModelParams::new(1.0, 0.1, 0.1, 0.1, 3).unwrap().with_n_max(17)).is_err());
}

#[test]
fn paramagnet_energy_and_symmetry() {
    let p = ModelParams::new(1.0, 0.35, 0.0, 0.0, 5).unwrap().with_n_max(3);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 1).unwrap();
    assert!((spec.energies[0] + 0.35 * 5.0).abs() < 1e-12);

    let q = ModelParams::new(1.0, 0.3, 0.4, 0.7, 3).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&q).unwrap();
    let h = sys.hamiltonian().map(|x| c(x));
    let par = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sys.parity_diagonal().iter().map(|&x| c(x)).collect()));
    let comm = &h * &par - &par * &h;
    assert!(comm.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn spectrum_is_converged_in_the_cutoff() {
    let base = ModelParams::new(1.0, 0.3, 0.2, 0.4, 4).unwrap();
    let lo = ed_spectrum(&DenseSystem::new(&base.with_n_max(12)).unwrap(), 3).unwrap();
    let hi_sys = DenseSystem::new(&base.with_n_max(16)).unwrap();
    let hi = ed_spectrum(&hi_sys, 3).unwrap();
    let top = hi_sys.oscillator_state(&hi.states[0]).unwrap().top_population();
    assert!(top < 1e-10);
    for k in 0..3 {
        assert!((lo.energies[k] - hi.energies[k]).abs() < 1e-10);
    }
}

#[test]
fn exact_propagation() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 3).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 1).unwrap();
    let e0 = spec.energies[0];
    let out = ed_propagate(&sys, &spec.states[0], 0.7).unwrap();
    let ov = dotc(&spec.states[0], &out);
    assert!((ov - Complex64::new(0.0, -e0 * 0.7).exp()).norm() < 1e-12);

    let mut r = rng(3);
    let psi: Vec<Complex64> = (0..sys.dim()).map(|_| Complex64::new(rand::Rng::random_range(&mut r, -1.0..1.0), rand::Rng::random_range(&mut r, -1.0..1.0))).collect();
    let n0 = norm_sqr(&psi);
    let same = ed_propagate(&sys, &psi, 0.0).unwrap();
    assert!(psi.iter().zip(&same).all(|(a, b)| (a - b).norm() < 1e-12));
    let later = ed_propagate(&sys, &psi, 5.0).unwrap();
    assert!((norm_sqr(&later) / n0 - 1.0).abs() < 1e-12);
}

#[test]
fn unmeasured_trajectory_is_unitary_propagation() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.6, 3).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&p).unwrap();
    let psi0 = spins_up_with(coherent_amplitudes(c(0.6), 4), 3);
    let s = TrajectorySettings { kappa: 0.0, dt: 0.05, t_final: 1.0, seed: 4, observables_every: 4, noise_substeps: 1, keep_states: true };
    let rec = ed_trajectory(&sys, &psi0, &s).unwrap();
    for (k, t) in rec.times.iter().enumerate() {
        let exact = sys.oscillator_state(&sys.propagate(&psi0, *t)).unwrap();
        assert!((rec.q_mean[k] - exact.quadrature()).abs() < 1e-10);
        assert!(rec.norm_drift[k] < 1e-12);
    }
}

#[test]
fn vacuum_is_a_fixed_point_of_pure_decay() {
    let p = ModelParams::new(1.0, 0.0, 0.0, 0.0, 2).unwrap().with_n_max(4);
    let sys = DenseSystem::new(&p).unwrap();
    let psi0 = spins_up_with(coherent_amplitudes(c(0.0), 4), 2);
    let s = TrajectorySettings { kappa: 1.0, dt: 0.01, t_final: 1.0, seed: 9, observables_every: 10, noise_substeps: 1, keep_states: false };
    let rec = ed_trajectory(&sys, &psi0, &s).unwrap();
    assert!(rec.n_mean.iter().all(|n| n.abs() < 1e-14));
    assert!(rec.q_mean.iter().all(|q| q.abs() < 1e-14));
}

#[test]
fn lindblad_conserves_trace_and_damps_photons() {
    let p = ModelParams::new(1.0, 0.2, 0.1, 0.0, 2).unwrap().with_n_max(12);
    let sys = DenseSystem::new(&p).unwrap();
    let psi0 = spins_up_with(coherent_amplitudes(c(1.5), 12), 2);
    let v = nalgebra::DVector::from_vec(psi0.clone());
    let rho0 = &v * v.adjoint();
    let kappa = 0.4;
    let series = ed_lindblad(&sys, &rho0, kappa, 0.005, 3.0, 20).unwrap();
    let n0 = series.n_mean[0];
    for (k, t) in series.times.iter().enumerate() {
        assert!((series.trace[k] - 1.0).abs() < 1e-8);
        assert!((series.n_mean[k] - n0 * (-kappa * t).exp()).abs() < 1e-6, "t={t}");
    }
    // κ = 0: von Neumann evolution of a pure state
    let unitary = ed_lindblad(&sys, &rho0, 0.0, 0.005, 1.0, 200).unwrap();
    let psi_t = nalgebra::DVector::from_vec(sys.propagate(&psi0, 1.0));
    let exact = &psi_t * psi_t.adjoint();
    let last = unitary.states.last().unwrap();
    assert!((last - exact).iter().all(|z| z.norm() < 1e-8));
}

#[test]
fn trajectory_ensemble_reproduces_the_master_equation() {
    let p = ModelParams::new(1.0, 0.3, 0.2, 0.5, 2).unwrap().with_n_max(8);
    let sys = DenseSystem::new(&p).unwrap();
    let psi0 = spins_up_with(coherent_amplitudes(c(1.0), 8), 2);
    let v = nalgebra::DVector::from_vec(psi0.clone());
    let (kappa, dt, t_final) = (0.5, 0.005, 1.5);
    let series = ed_lindblad(&sys, &(&v * v.adjoint()), kappa, dt, t_final, 30).unwrap();
    let records: Vec<_> = (0..300)
        .map(|seed| {
            let s = TrajectorySettings { kappa, dt, t_final, seed, observables_every: 30, noise_substeps: 1, keep_states: false };
            ed_trajectory(&sys, &psi0, &s).unwrap()
        })
        .collect();
    let stats = ensemble_statistics(&records).unwrap();
    let se_n = stats.n.standard_error(stats.count);
    let se_q = stats.q.standard_error(stats.count);
    for k in 1..stats.times.len() {
        // Euler-level bias is O(dt); allow it on top of the 3σ band
        assert!((stats.n.mean[k] - series.n_mean[k]).abs() < 3.0 * se_n[k] + 5.0 * dt, "n at {k}");
        assert!((stats.q.mean[k] - series.q_mean[k]).abs() < 3.0 * se_q[k] + 5.0 * dt, "q at {k}");
    }
}

#[test]
fn free_fermions_limits_and_dense_agreement() {
    let ff = free_fermion_ising(0.0, 0.7, 6).unwrap();
    assert!((ff.energy + 0.7 * 5.0).abs() < 1e-12);
    let ff = free_fermion_ising(0.4, 0.0, 6).unwrap();
    assert!((ff.energy + 0.4 * 6.0).abs() < 1e-12);

    let (h, j, l) = (0.45, 0.8, 8);
    let p = ModelParams::new(1.0, h, j, 0.0, l).unwrap().with_n_max(1);
    let sys = DenseSystem::new(&p).unwrap();
    let spec = ed_spectrum(&sys, 1).unwrap();
    let ff = free_fermion_ising(h, j, l).unwrap();
    assert!((spec.energies[0] - ff.energy).abs() < 1e-10);
    let sz = sys.sigma_z(&spec.states[0]);
    for i in 0..l {
        assert!((sz[i] - ff.sigma_z[i]).abs() < 1e-9);
    }
    // σ_yσ_y from the dense ground state with a test-side operator
    let d = dims(&p);
    let v = nalgebra::DVector::from_vec(spec.states[0].clone());
    for (a, b) in [(1usize, 2usize), (1, 5), (3, 8)] {
        let op = embed(&d, &[(a, sy()), (b, sy())]);
        let e = expect(&op, &v).re;
        assert!((e - ff.yy[(a - 1) * l + (b - 1)]).abs() < 1e-9, "({a},{b})");
    }
}

#[test]
fn pfaffian_squares_to_determinant() {
    let mut r = rng(12);
    for n in [2usize, 4, 6, 8] {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let x: f64 = rand::Rng::random_range(&mut r, -1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = -x;
            }
        }
        let det = DMatrix::from_row_slice(n, n, &a).determinant();
        let pf = pfaffian(&mut a.clone(), n);
        assert!((pf * pf - det).abs() < 1e-10 * det.abs().max(1.0));
    }
}
