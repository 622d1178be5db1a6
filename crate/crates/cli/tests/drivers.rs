use std::path::Path;

use dicke_cli::analysis::{locate_peak, peak_scaling_analysis, power_law_fit, SliceSeries};
use dicke_cli::config::{simplex_points, Mode, ScanConfig};
use dicke_cli::ensemble::run_trajectory_ensemble;
use dicke_cli::scan::{run_simplex_scan, run_slice};
use dicke_cli::table::Table;
use dicke_mps::ed::{ed_spectrum, DenseSystem};
use dicke_mps::groundstate::boltzmann;

const DOC_EXAMPLE: &str = r#"
mode = "slice"
output = "runs/x"
workers = 4
observables = ["xi", "sz"]

[model]
h = 0.3
J = 0.1
g = 0.4
L = 6

[solver]
max_bond = 32
levels = 3

[slice]
variable = "h"
start = 0.2
stop = 0.4
steps = 5
temperature = 0.05
"#;

fn simplex_cfg(dir: &Path, l: usize, res: usize, n_max: usize) -> ScanConfig {
    ScanConfig::from_toml(&format!(
        r#"
mode = "simplex"
output = "{}"
[model]
L = {l}
n_max = {n_max}
[simplex]
resolution = {res}
"#,
        dir.display()
    ))
    .unwrap()
}

fn slice_cfg(dir: &Path, body: &str) -> ScanConfig {
    ScanConfig::from_toml(&format!("mode = \"slice\"\noutput = \"{}\"\n{body}", dir.display())).unwrap()
}

fn bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn documented_config_parses() {
    let cfg = ScanConfig::from_toml(DOC_EXAMPLE).unwrap();
    assert_eq!(cfg.mode, Mode::Slice);
    assert_eq!(cfg.slice.as_ref().unwrap().values().len(), 5);
    assert_eq!(cfg.model.base_params().unwrap().n_max, 14);
    let p = cfg.slice_params(0.25).unwrap();
    assert_eq!((p.h, p.j, p.g, p.omega), (0.25, 0.1, 0.4, 1.0));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ScanConfig::from_toml("mode = \"simplex\"\n[model]\nL = 4\n").is_err());
    assert!(ScanConfig::from_toml("mode = \"slice\"\n[model]\nL = 4\n[slice]\nvariable = \"h\"\nstart = 0\nstop = 1\nsteps = 0\n").is_err());
    assert!(ScanConfig::from_toml("mode = \"slice\"\n[model]\nL = 4\ng = -1\n[slice]\nvariable = \"h\"\nstart = 0\nstop = 1\nsteps = 3\n").is_err());
    assert!(ScanConfig::from_toml("mode = \"simplex\"\nbogus = 1\n[model]\nL = 4\n[simplex]\nresolution = 2\n").is_err());
    let thermal_without_levels = DOC_EXAMPLE.replace("levels = 3", "levels = 1");
    assert!(ScanConfig::from_toml(&thermal_without_levels).is_err());
}

#[test]
fn simplex_grid_lies_on_the_constraint_plane() {
    for r in [1, 4, 10, 17] {
        let pts = simplex_points(r);
        assert_eq!(pts.len(), (r + 1) * (r + 2) / 2);
        for (h, j, g) in pts {
            assert!((h + j + g - 1.0).abs() < 1e-12);
            assert!(h >= 0.0 && j >= 0.0 && g >= 0.0);
        }
    }
}

#[test]
fn hash_ignores_run_controls() {
    let dir = tempfile::tempdir().unwrap();
    let a = simplex_cfg(dir.path(), 4, 2, 4);
    let mut b = a.clone();
    b.workers = 7;
    b.resume = true;
    b.output = "elsewhere".into();
    assert_eq!(a.hash(), b.hash());
    b.seed_base = 99;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn simplex_corners() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_simplex_scan(&simplex_cfg(dir.path(), 4, 1, 4)).unwrap();
    let t = &out.table;
    assert_eq!(t.rows.len(), 3);
    let h = t.numeric("h").unwrap();
    let j = t.numeric("J").unwrap();
    let n = t.numeric("n_per_L").unwrap();
    let g1 = t.numeric("gap1").unwrap();
    let g2 = t.numeric("gap2").unwrap();
    assert!(t.text("converged").unwrap().iter().all(|f| *f == "1"));
    let field = h.iter().position(|&x| x == 1.0).unwrap();
    // one photon costs ω = 1, one spin flip 2h = 2
    assert!(n[field].abs() < 1e-10);
    assert!((g1[field] - 1.0).abs() < 1e-8 && (g2[field] - 2.0).abs() < 1e-8, "{} {}", g1[field], g2[field]);
    let ising = j.iter().position(|&x| x == 1.0).unwrap();
    assert!(g1[ising] < 1e-8);
    for key in ["format_version: 1", "config_hash: ", "columns: index", "xi_method: connected"] {
        assert!(std::fs::read_to_string(&out.path).unwrap().contains(key));
    }
}

#[test]
fn coarse_simplex_matches_dense_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = simplex_cfg(dir.path(), 6, 4, 10);
    cfg.workers = 3;
    let out = run_simplex_scan(&cfg).unwrap();
    let t = &out.table;
    assert_eq!(t.rows.len(), 15);
    let cols = |c: &str| t.numeric(c).unwrap();
    let (h, j, g, e0, n, g1, g2, par) =
        (cols("h"), cols("J"), cols("g"), cols("E0"), cols("n_per_L"), cols("gap1"), cols("gap2"), cols("parity"));
    for i in 0..15 {
        assert_eq!(t.rows[i][0], i.to_string());
        assert_eq!(t.text("converged").unwrap()[i], "1", "row {i}");
        let p = cfg.model.params(h[i], j[i], g[i], 1.0).unwrap();
        let sys = DenseSystem::new(&p).unwrap();
        let sp = ed_spectrum(&sys, 3).unwrap();
        let e = &sp.energies;
        assert!((e0[i] - e[0]).abs() <= 1e-9 * e[0].abs().max(1.0), "row {i}: {} vs {}", e0[i], e[0]);
        assert!((g1[i] - (e[1] - e[0])).abs() < 1e-7, "row {i}");
        assert!((g2[i] - (e[2] - e[0])).abs() < 1e-7, "row {i}: {} {} vs {:?}", g1[i], g2[i], e);
        if e[1] - e[0] > 1e-5 {
            let (n_ed, _) = sys.oscillator_state(&sp.states[0]).unwrap().photon_stats();
            assert!((n[i] - n_ed / 6.0).abs() < 1e-7, "row {i}");
            assert!((par[i] - sp.parities[0]).abs() < 1e-7, "row {i}");
        }
    }
}

#[test]
fn parallel_scan_is_byte_identical_to_serial() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let serial = simplex_cfg(a.path(), 4, 3, 5);
    let mut par = simplex_cfg(b.path(), 4, 3, 5);
    par.workers = 4;
    let x = run_simplex_scan(&serial).unwrap();
    let y = run_simplex_scan(&par).unwrap();
    assert_eq!(bytes(&x.path), bytes(&y.path));
}

#[test]
fn interrupted_scan_resumes_to_identical_table() {
    let full_dir = tempfile::tempdir().unwrap();
    let full = run_simplex_scan(&simplex_cfg(full_dir.path(), 4, 3, 5)).unwrap();
    let text = std::fs::read_to_string(&full.path).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = simplex_cfg(dir.path(), 4, 3, 5);
    let header_lines = text.lines().take_while(|l| l.starts_with('#')).count();
    let kept: Vec<&str> = text.lines().take(header_lines + 4).collect();
    let partial = format!("{}\n4\t0.0\t0.3", kept.join("\n"));
    std::fs::write(dir.path().join("simplex.tsv"), partial).unwrap();
    cfg.resume = true;
    let resumed = run_simplex_scan(&cfg).unwrap();
    assert_eq!(resumed.computed, full.table.rows.len() - 4);
    assert_eq!(std::fs::read_to_string(&resumed.path).unwrap(), text);

    let again = run_simplex_scan(&cfg).unwrap();
    assert_eq!(again.computed, 0);
    assert_eq!(std::fs::read_to_string(&again.path).unwrap(), text);
}

#[test]
fn resume_refuses_a_foreign_table() {
    let dir = tempfile::tempdir().unwrap();
    run_simplex_scan(&simplex_cfg(dir.path(), 4, 1, 4)).unwrap();
    let mut other = simplex_cfg(dir.path(), 5, 1, 4);
    other.resume = true;
    assert!(run_simplex_scan(&other).is_err());
}

const SLICE6: &str = r#"
[model]
J = 0.3
g = 0.49
L = 6
n_max = 10
[solver]
levels = 3
[slice]
variable = "h"
start = 0.1
stop = 0.5
steps = 5
temperature = 0.1
"#;

#[test]
fn slice_matches_dense_reference_row_by_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = slice_cfg(dir.path(), SLICE6);
    let t = run_slice(&cfg).unwrap().table;
    let cols = |c: &str| t.numeric(c).unwrap();
    let (x, e0, n, var, g1, g2, par, nth) =
        (cols("x_h"), cols("E0"), cols("n"), cols("var_n"), cols("gap1"), cols("gap2"), cols("parity"), cols("n_thermal"));
    for i in 0..x.len() {
        assert_eq!(t.text("converged").unwrap()[i], "1");
        let p = cfg.slice_params(x[i]).unwrap();
        let sys = DenseSystem::new(&p).unwrap();
        let sp = ed_spectrum(&sys, 3).unwrap();
        let e = &sp.energies;
        assert!((e0[i] - e[0]).abs() <= 1e-9 * e[0].abs(), "row {i}");
        assert!((g1[i] - (e[1] - e[0])).abs() < 1e-7 && (g2[i] - (e[2] - e[0])).abs() < 1e-7, "row {i}");
        let ns: Vec<f64> = sp.states.iter().map(|s| sys.oscillator_state(s).unwrap().photon_stats().0).collect();
        assert!((nth[i] - boltzmann(e, &ns, 0.1).value).abs() < 1e-7, "row {i}");
        if e[1] - e[0] > 1e-5 {
            let (n_ed, var_ed) = sys.oscillator_state(&sp.states[0]).unwrap().photon_stats();
            assert!((n[i] - n_ed).abs() < 1e-7 && (var[i] - var_ed).abs() < 1e-7, "row {i}");
            assert!((par[i] - sp.parities[0]).abs() < 1e-7, "row {i}");
        }
    }
}

#[test]
fn uncoupled_slice_has_no_photons() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = slice_cfg(
        dir.path(),
        "[model]\nJ = 0.4\ng = 0.0\nL = 5\nn_max = 3\n[solver]\nlevels = 1\n[slice]\nvariable = \"h\"\nstart = 0.0\nstop = 1.0\nsteps = 6\n",
    );
    let t = run_slice(&cfg).unwrap().table;
    assert!(t.numeric("n").unwrap().iter().all(|n| n.abs() < 1e-12));
    assert!(t.numeric("gap1").unwrap().iter().all(|g| g.is_nan()));
}

#[test]
fn warm_start_does_not_change_converged_answers() {
    let body = "[model]\nJ = 0.1\ng = 0.4\nL = 8\n[solver]\nlevels = 1\nmax_bond = 48\n[slice]\nvariable = \"h\"\nstart = 0.2\nstop = 0.32\nsteps = 4\n";
    let wd = tempfile::tempdir().unwrap();
    let cd = tempfile::tempdir().unwrap();
    let warm = run_slice(&slice_cfg(wd.path(), body)).unwrap().table;
    let cold = run_slice(&slice_cfg(cd.path(), &format!("{body}warm_start = false\n"))).unwrap().table;
    for c in ["E0", "n", "var_n", "var_over_n", "parity"] {
        for (a, b) in warm.numeric(c).unwrap().iter().zip(cold.numeric(c).unwrap()) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{c}: {a} vs {b}");
        }
    }
    assert!(warm.text("converged").unwrap().iter().all(|f| *f == "1"));
}

#[test]
fn interrupted_slice_resumes_the_warm_chain() {
    let body = "[model]\nJ = 0.1\ng = 0.4\nL = 6\n[solver]\nlevels = 1\n[slice]\nvariable = \"h\"\nstart = 0.2\nstop = 0.35\nsteps = 6\n";
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = slice_cfg(dir.path(), body);
    let full = run_slice(&cfg).unwrap();
    let text = std::fs::read_to_string(&full.path).unwrap();
    let header_lines = text.lines().take_while(|l| l.starts_with('#')).count();
    let kept: Vec<&str> = text.lines().take(header_lines + 3).collect();
    std::fs::write(&full.path, format!("{}\n3\t0.2", kept.join("\n"))).unwrap();
    cfg.resume = true;
    let resumed = run_slice(&cfg).unwrap();
    assert_eq!(resumed.computed, 3);
    assert_eq!(std::fs::read_to_string(&resumed.path).unwrap(), text);
}

#[test]
fn unconverged_points_are_flagged_and_the_scan_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = slice_cfg(
        dir.path(),
        "[model]\nJ = 0.3\ng = 0.6\nL = 6\nn_max = 8\n[solver]\nlevels = 1\nmax_bond = 2\nsweep_cap = 3\nmin_sweeps = 1\n[slice]\nvariable = \"h\"\nstart = 0.1\nstop = 0.3\nsteps = 3\n",
    );
    let t = run_slice(&cfg).unwrap().table;
    assert_eq!(t.rows.len(), 3);
    assert!(t.text("converged").unwrap().iter().all(|f| *f == "0"));
    assert!(t.text("status").unwrap().iter().all(|s| *s == "sweep_cap" || *s == "stalled"));
}

fn traj_cfg(dir: &Path, kappa: f64, seeds: usize, workers: usize) -> ScanConfig {
    ScanConfig::from_toml(&format!(
        r#"
mode = "trajectory"
output = "{}"
workers = {workers}
seed_base = 40
[model]
h = 0.2
J = 0.3
g = 0.7
L = 3
n_max = 8
[trajectory]
kappa = {kappa}
dt = 0.02
t_final = 0.6
seeds = {seeds}
observables_every = 5
fit_bond = 32
"#,
        dir.display()
    ))
    .unwrap()
}

#[test]
fn unmonitored_ensemble_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_trajectory_ensemble(&traj_cfg(dir.path(), 0.0, 3, 2)).unwrap();
    assert!(out.failed.is_empty());
    for r in &out.records {
        for series in [&r.q_mean, &r.n_mean, &r.parity, &r.entropy_osc] {
            assert!(series.iter().all(|v| (v - series[0]).abs() < 1e-7), "{series:?}");
        }
    }
}

#[test]
fn ensemble_files_are_reproducible_and_resumable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_trajectory_ensemble(&traj_cfg(a.path(), 0.5, 4, 1)).unwrap();
    let second = run_trajectory_ensemble(&traj_cfg(b.path(), 0.5, 4, 3)).unwrap();
    assert_eq!(first.records.len(), 4);
    assert_eq!(second.records, first.records);
    for seed in 40..44 {
        let name = format!("traj_{seed}.tsv");
        assert_eq!(bytes(&a.path().join(&name)), bytes(&b.path().join(&name)));
        assert!(std::fs::read_to_string(a.path().join(&name)).unwrap().contains(&format!("# seed: {seed}")));
    }
    let ens = bytes(&a.path().join("ensemble.tsv"));
    assert_eq!(ens, bytes(&b.path().join("ensemble.tsv")));

    std::fs::remove_file(a.path().join("traj_42.tsv")).unwrap();
    let mut cfg = traj_cfg(a.path(), 0.5, 4, 2);
    cfg.resume = true;
    run_trajectory_ensemble(&cfg).unwrap();
    assert_eq!(bytes(&a.path().join("ensemble.tsv")), ens);
    let t = Table::read(&a.path().join("ensemble.tsv")).unwrap();
    assert_eq!(t.meta_value("survivors"), Some("4 of 4"));
    assert!(t.numeric("S_of_mean_state").unwrap().iter().all(|s| s.is_finite()));
}

#[test]
fn synthetic_exponents_are_recovered() {
    let (hc, a_h, a_x) = (0.312, 0.19, -0.5);
    let sizes = [8usize, 12, 16, 24, 32, 48];
    let series: Vec<SliceSeries> = sizes
        .iter()
        .map(|&l| {
            let lf = l as f64;
            let height = 1.3 * lf.powf(a_h);
            let loc = hc - 0.4 * lf.powf(a_x);
            let x: Vec<f64> = (0..61).map(|i| 0.0 + 0.006 * i as f64).collect();
            let y = x.iter().map(|&h| height / (1.0 + ((h - loc) / 0.05).powi(2))).collect();
            SliceSeries { l, x, y }
        })
        .collect();
    let res = peak_scaling_analysis(&series, hc).unwrap();
    let hfit = res.height.unwrap();
    let xfit = res.location.unwrap();
    assert!((hfit.exponent - a_h).abs() < 0.005, "{hfit:?}");
    assert!((xfit.exponent - a_x).abs() < 0.005, "{xfit:?}");
    assert!(hfit.exponent_se < 0.005 && xfit.exponent_se < 0.005);
}

#[test]
fn parabolic_peak_is_exact_and_edge_peaks_are_rejected() {
    let x: Vec<f64> = vec![0.1, 0.2, 0.35, 0.4, 0.6];
    let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * (v - 0.31f64).powi(2)).collect();
    let (loc, h, _) = locate_peak(&x, &y).unwrap();
    assert!((loc - 0.31).abs() < 1e-12 && (h - 2.0).abs() < 1e-12);
    assert!(locate_peak(&x, &x).is_err());
    let fit = power_law_fit(&[1.0, 2.0, 4.0], &[3.0, 6.0, 12.0]).unwrap();
    assert!((fit.exponent - 1.0).abs() < 1e-12 && (fit.prefactor - 3.0).abs() < 1e-12);

    let mono = SliceSeries { l: 4, x: x.clone(), y: x.clone() };
    let good = |l| SliceSeries { l, x: x.clone(), y: y.clone() };
    let res = peak_scaling_analysis(&[good(8), mono, good(16)], 0.3).unwrap();
    assert!(res.peaks[1].is_err() && res.height.is_none());
    assert!(peak_scaling_analysis(&[good(8), good(16)], 0.3).is_err());
}

#[test]
fn slice_table_feeds_the_analysis() {
    let mut t = Table::new("slice", "abc", "{}", ["index", "x_h", "L", "var_over_n"].map(String::from).to_vec());
    for (i, (x, y)) in [(0.2, 1.0), (0.25, 1.4), (0.3, 1.1), (0.35, f64::NAN)].iter().enumerate() {
        t.rows.push(vec![i.to_string(), x.to_string(), "12".into(), y.to_string()]);
    }
    let back = Table::parse(&format!("{}{}\n", t.header(), t.rows.iter().map(|r| r.join("\t")).collect::<Vec<_>>().join("\n")))
        .unwrap();
    assert_eq!(back, t);
    let s = SliceSeries::from_table(&back, "var_over_n").unwrap();
    assert_eq!((s.l, s.x.len()), (12, 3));
}
