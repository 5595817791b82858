//! Acceptance suite: one test per acceptance criterion, each printing a
//! `criterion N: PASS` line with the measured figures (visible with
//! `cargo test -- --nocapture`).

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use simop_core::assignment::spectrum_distance;
use simop_core::blockspace::{BlockMatrix, TruncationWindow};
use simop_core::evolution::{
    group_apply, group_apply_with, solve_inhomogeneous, tail_bound, EvolutionState, GroupBlocks,
};
use simop_core::linalg::{c64, CMatrix};
use simop_core::oracle::{self, DenseTruncation};
use simop_core::potential::PotentialSpec;
use simop_core::quadrature;
use simop_core::similarity::{similarity_transform, Similarity, SimilarityOptions};
use simop_core::spectral::{equiconvergence_gap, similarity_residual, spectrum};
use simop_core::C64;

const OMEGA: f64 = 2.0 * std::f64::consts::PI;

fn window(dim: usize, n: i32) -> TruncationWindow {
    TruncationWindow::new(OMEGA, dim, n).unwrap()
}

/// Deterministic generator for the randomized cases (splitmix64).
struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    }
}

struct Case {
    label: String,
    band: i32,
    v: BlockMatrix,
    sim: Similarity,
    dense: DenseTruncation,
    oracle_evs: Vec<C64>,
    pipeline_seconds: f64,
}

/// The five randomized potentials of the oracle-equivalence criterion:
/// d in {1, 2}, coefficient band <= 3, HS norm 0.15, omega = 2 pi, N = 32.
fn random_cases() -> &'static [Case] {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        let params = [(1usize, 1u64), (1, 2), (1, 3), (2, 4), (2, 5)];
        params
            .iter()
            .map(|&(dim, seed)| {
                let w = window(dim, 32);
                let mut rng = Rng(seed);
                let band = 3;
                let raw: Vec<(i32, CMatrix)> = (-band..=band)
                    .map(|n| {
                        let block = CMatrix::from_fn(dim, dim, |_, _| {
                            c64(0.5 * rng.uniform(), 0.5 * rng.uniform())
                        });
                        (n, block)
                    })
                    .collect();
                let unscaled = PotentialSpec::from_coefficients(w, raw.clone()).unwrap();
                let norm = unscaled.v_matrix().hs_norm_fine();
                let scale = c64(0.15 / norm, 0.0);
                let spec = PotentialSpec::from_coefficients(
                    w,
                    raw.into_iter().map(|(n, b)| (n, b.scale(scale))),
                )
                .unwrap();
                let v = spec.v_matrix();
                let start = Instant::now();
                let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
                let pipeline_seconds = start.elapsed().as_secs_f64();
                let dense = oracle::dense_truncation(&spec);
                let oracle_evs = oracle::spectrum(&dense).unwrap();
                Case {
                    label: format!("d={dim} seed={seed}"),
                    band,
                    v,
                    sim,
                    dense,
                    oracle_evs,
                    pipeline_seconds,
                }
            })
            .collect()
    })
}

fn golden_case() -> &'static (PotentialSpec, Similarity) {
    static GOLDEN: OnceLock<(PotentialSpec, Similarity)> = OnceLock::new();
    GOLDEN.get_or_init(|| {
        let spec = PotentialSpec::constant_over(window(1, 8), 10.0).unwrap();
        let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
        (spec, sim)
    })
}

fn probe_state(w: TruncationWindow) -> EvolutionState {
    let mut state = EvolutionState::zeros(w);
    for l in w.modes() {
        let off = w.offset(l);
        for cmp in 0..w.dim() {
            state.coeffs_mut()[off + cmp] = c64(1.0 / (1.0 + (l * l) as f64), 0.0);
        }
    }
    state
}

#[test]
fn criterion_01_golden_constant_potential_suite() {
    let c = 10.0;
    let start = Instant::now();
    let spec = PotentialSpec::constant_over(window(1, 8), c).unwrap();
    let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
    let report = spectrum(&sim).unwrap();
    let gv = simop_core::transforms::solve_commutator(&spec.v_matrix(), 0);
    let inverse_factor = gv.invert_i_plus().unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let reference = oracle::closed_form_example(c, window(1, 8)).unwrap();
    // spectrum: {-1/c} plus i j sqrt(1 - 1/(c j)^2), 1 <= |j| <= 8
    let dist = spectrum_distance(&report.all(), &reference.spectrum());
    assert!(dist.max <= 1e-10, "spectrum distance {}", dist.max);
    // fixed-point diagonal
    let mut diag_err = 0.0_f64;
    for j in -8..=8i32 {
        let got = sim.x_star.block_or_zero(j, j)[(0, 0)];
        diag_err = diag_err.max((got - reference.fixed_point_diag(j)).norm());
    }
    assert!(diag_err <= 1e-10, "fixed-point diagonal error {diag_err}");
    // inverse of the stage-one factor
    let mut factor_err = 0.0_f64;
    for j in -8..=8i32 {
        for l in -8..=8i32 {
            let mut got = inverse_factor.block_or_zero(j, l)[(0, 0)];
            if j == l {
                got += c64(1.0, 0.0);
            }
            factor_err = factor_err.max((got - reference.inverse_factor_entry(j, l)).norm());
        }
    }
    assert!(factor_err <= 1e-12, "inverse factor error {factor_err}");
    assert!(elapsed < 1.0, "golden suite took {elapsed:.3} s");
    println!(
        "criterion 1: PASS (spectrum {:.2e}, diag {:.2e}, factor {:.2e}, {:.3} s)",
        dist.max, diag_err, factor_err, elapsed
    );
}

#[test]
fn criterion_02_oracle_spectrum_equivalence() {
    let mut worst_dist = 0.0_f64;
    let mut worst_time = 0.0_f64;
    for case in random_cases() {
        let start = Instant::now();
        let report = spectrum(&case.sim).unwrap();
        let interior = report.up_to_mode(16);
        let dist = spectrum_distance(&interior, &case.oracle_evs);
        let elapsed = start.elapsed().as_secs_f64() + case.pipeline_seconds;
        assert!(
            dist.max <= 1e-6,
            "{}: matching distance {}",
            case.label,
            dist.max
        );
        assert!(elapsed < 30.0, "{}: took {elapsed:.1} s", case.label);
        worst_dist = worst_dist.max(dist.max);
        worst_time = worst_time.max(elapsed);
    }
    println!(
        "criterion 2: PASS (5 cases, worst distance {worst_dist:.2e}, worst time {worst_time:.2} s)"
    );
}

#[test]
fn criterion_03_intertwining_residual() {
    let (spec, sim) = golden_case();
    let v = spec.v_matrix();
    let r = similarity_residual(&v, sim, spec.band()).unwrap();
    let tol = 1e-8 * (1.0 + v.hs_norm_fine());
    assert!(r <= tol, "golden: residual {r} > {tol}");
    for case in random_cases() {
        let r = similarity_residual(&case.v, &case.sim, case.band).unwrap();
        let tol = 1e-8 * (1.0 + case.v.hs_norm_fine());
        assert!(r <= tol, "{}: residual {r} > {tol}", case.label);
    }
    println!("criterion 3: PASS (residual {:.2e} on the golden case)", r);
}

#[test]
fn criterion_04_fixed_point_contract() {
    let mut checked = 0;
    let all: Vec<&Similarity> = std::iter::once(&golden_case().1)
        .chain(random_cases().iter().map(|c| &c.sim))
        .collect();
    for sim in all {
        let log = &sim.log.fixed_point;
        if sim.v_tilde.is_zero() {
            continue;
        }
        for pair in log.residuals.windows(2) {
            assert!(
                pair[1] < pair[0],
                "residuals not strictly decreasing: {:?}",
                log.residuals
            );
        }
        let last = *log.residuals.last().unwrap();
        assert!(
            last <= 1e-12 * sim.log.v_tilde_norm,
            "final residual {last} > 1e-12 |Vt|"
        );
        assert!(
            log.max_ball_distance <= log.ball_radius,
            "iterate left the 3|Vt| ball"
        );
        checked += 1;
    }
    println!("criterion 4: PASS ({checked} certified runs checked)");
}

#[test]
fn criterion_05_group_correctness() {
    // group law on pseudo-random (t, s) pairs in [-2, 2]^2
    let (_, sim) = golden_case();
    let w = *sim.window();
    let phi = probe_state(w);
    let norm = phi.l2_norm();
    let mut rng = Rng(42);
    let mut law_err = 0.0_f64;
    for _ in 0..5 {
        let t = 2.0 * rng.uniform();
        let s = 2.0 * rng.uniform();
        let once = group_apply(sim, t + s, &phi).unwrap();
        let twice = group_apply(sim, t, &group_apply(sim, s, &phi).unwrap()).unwrap();
        law_err = law_err.max(once.sub(&twice).l2_norm() / norm);
    }
    assert!(law_err <= 1e-9, "group law error {law_err}");

    // method orbit against the dense exponential on the randomized cases
    let mut oracle_err = 0.0_f64;
    for case in random_cases() {
        let w = *case.sim.window();
        let phi = probe_state(w);
        let blocks = GroupBlocks::of(&case.sim);
        for t in [-1.0, -0.5, 0.5, 1.0] {
            let method = group_apply_with(&case.sim, &blocks, t, &phi).unwrap();
            let reference = oracle::evolve(&case.dense, &phi, t).unwrap();
            oracle_err = oracle_err.max(method.sub(&reference).l2_norm());
        }
    }
    assert!(oracle_err <= 1e-6, "orbit vs oracle error {oracle_err}");

    // zero potential reproduces exact translation
    let wz = window(1, 8);
    let zero =
        similarity_transform(&PotentialSpec::zero(wz), &SimilarityOptions::default()).unwrap();
    let phi = probe_state(wz);
    let t = 0.8;
    let got = group_apply(&zero, t, &phi).unwrap();
    let mut translation_err = 0.0_f64;
    for l in wz.modes() {
        let want = phi.mode_coeff(l)[0] * (wz.eigenvalue(l) * t).exp();
        translation_err = translation_err.max((got.mode_coeff(l)[0] - want).norm());
    }
    assert!(translation_err <= 1e-12, "translation error {translation_err}");
    println!(
        "criterion 5: PASS (law {law_err:.2e}, vs oracle {oracle_err:.2e}, translation {translation_err:.2e})"
    );
}

#[test]
fn criterion_06_mild_solution_identity() {
    // constant-in-time forcing on the golden potential; the mild solution
    // satisfies u(t) = phi + L int_0^t u + int_0^t f with both sides
    // evaluated by the same quadrature
    let (spec, sim) = golden_case();
    let w = *sim.window();
    let phi = probe_state(w);
    let mut f0 = EvolutionState::zeros(w);
    f0.coeffs_mut()[w.offset(0)] = c64(0.3, 0.1);
    f0.coeffs_mut()[w.offset(1)] = c64(0.2, 0.0);
    let forcing = f0.clone();
    let t = 1.0;
    let u_t = solve_inhomogeneous(sim, &phi, &move |_| forcing.clone(), &[t])
        .unwrap()
        .remove(0);
    // int_0^t u(tau) dtau by the same adaptive rule, sampling the solver
    let forcing2 = f0.clone();
    let phi2 = phi.clone();
    let integral = quadrature::integrate(
        |tau| {
            let f = forcing2.clone();
            solve_inhomogeneous(sim, &phi2, &move |_| f.clone(), &[tau])
                .unwrap()
                .remove(0)
                .coeffs()
                .to_vec()
        },
        0.0,
        t,
        w.flat_dim(),
        simop_core::evolution::DUHAMEL_TOL,
    )
    .unwrap();
    let int_u = EvolutionState::from_coeffs(w, integral).unwrap();
    let operator = BlockMatrix::mode_diagonal(w).sub(&spec.v_matrix()).unwrap();
    let l_int_u = EvolutionState::from_coeffs(w, operator.apply(int_u.coeffs())).unwrap();
    let rhs = phi.add(&l_int_u).add(&f0.scale(c64(t, 0.0)));
    let residual = u_t.sub(&rhs).l2_norm();
    assert!(residual <= 1e-6, "mild-solution residual {residual}");
    println!("criterion 6: PASS (residual {residual:.2e})");
}

#[test]
fn criterion_07_equiconvergence() {
    let spec = PotentialSpec::constant_over(window(1, 16), 10.0).unwrap();
    let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
    let v = spec.v_matrix();
    let gaps: Vec<_> = ((sim.k + 1)..=16)
        .map(|n| equiconvergence_gap(&sim, &v, n).unwrap())
        .collect();
    // nonincreasing within rounding slack
    for pair in gaps.windows(2) {
        assert!(
            pair[1].gap <= pair[0].gap + 1e-12,
            "gap increased: {} -> {}",
            pair[0].gap,
            pair[1].gap
        );
    }
    let last = gaps.last().unwrap().gap;
    assert!(last <= 1e-3, "final gap {last}");
    // a single constant fitted at the first cutoff dominates afterwards
    // (1e-12 absolute headroom covers the rounding floor: for this
    // potential the mode pairs decouple and every gap is zero to
    // machine precision)
    let c3 = if gaps[0].bound_factor > 0.0 {
        gaps[0].gap / gaps[0].bound_factor
    } else {
        0.0
    };
    for g in &gaps {
        assert!(
            g.gap <= c3 * g.bound_factor + 1e-12,
            "fitted bound violated at n={}: {} > {}",
            g.n,
            g.gap,
            c3 * g.bound_factor
        );
    }
    // the fitted envelope is nondegenerate on a coupled (banded) potential
    let case = &random_cases()[0];
    let gaps: Vec<_> = ((case.sim.k + 1)..=32)
        .map(|n| equiconvergence_gap(&case.sim, &case.v, n).unwrap())
        .collect();
    let c3r = gaps[0].gap / gaps[0].bound_factor;
    for g in &gaps {
        assert!(
            g.gap <= c3r * g.bound_factor + 1e-12,
            "random case: fitted bound violated at n={}",
            g.n
        );
    }
    println!(
        "criterion 7: PASS (final gap {last:.2e}, fitted constants {c3:.2e} / {c3r:.2e})"
    );
}

#[test]
fn criterion_08_tail_estimate() {
    let (_, sim) = golden_case();
    let mut worst = f64::NEG_INFINITY;
    for (label, sim) in [("golden", sim), ("random", &random_cases()[0].sim)] {
        let w = *sim.window();
        let psi = probe_state(w);
        for n in (sim.k + 1)..w.half_width() {
            for t in [-1.0, 0.0, 1.0] {
                let est = tail_bound(sim, &psi, n, t).unwrap();
                assert!(
                    est.true_error <= est.bound,
                    "{label}: n={n} t={t}: error {} > bound {}",
                    est.true_error,
                    est.bound
                );
                worst = worst.max(est.true_error - est.bound);
            }
        }
    }
    println!("criterion 8: PASS (worst margin {worst:.2e})");
}

#[test]
fn criterion_09_square_summability() {
    let mut worst = 0.0_f64;
    for case in random_cases() {
        let report = spectrum(&case.sim).unwrap();
        let sums = &report.tail_partial_sums;
        let total = sums.last().unwrap().1;
        let at_half = sums
            .iter()
            .find(|(n, _)| *n == 16)
            .map(|(_, s)| *s)
            .unwrap();
        let increment = total - at_half;
        assert!(total > 0.0, "{}: no outer mass", case.label);
        assert!(
            increment <= 0.01 * total,
            "{}: tail increment {increment:.3e} exceeds 1% of {total:.3e}",
            case.label
        );
        worst = worst.max(increment / total);
    }
    println!(
        "criterion 9: PASS (5 cases, worst tail increment {:.4}% of total)",
        100.0 * worst
    );
}

#[test]
fn criterion_10_failure_path_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("huge.json");
    std::fs::write(
        &config,
        r#"{"omega": 6.283185307179586, "dim": 1, "half_width": 8,
           "potential": {"type": "constant", "c": 0.5}}"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_simop"))
        .args(["validate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let kind = body["error"]["kind"].as_str().unwrap();
    assert!(
        kind == "NoAdmissibleK" || kind == "NoAdmissibleM",
        "unexpected kind {kind}"
    );
    println!("criterion 10: PASS (exit 3, kind {kind})");
}
