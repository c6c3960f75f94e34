//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its measurements before asserting at the stated tolerance.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use qndmech_core::gaussian::{
    apply_symplectic, beamsplitter_map, feedforward_displace, homodyne_condition,
    physicality_check, qnd_map, squeeze_map, GaussianState, Quadrature, SymplecticMap,
};
use qndmech_core::linalg::symplectic_residual;
use qndmech_core::optimize::{optimize_seeded, SearchSpace};
use qndmech_core::protocol::{
    adiabatic_bath_ln, adiabatic_transfer, approx_ln, full_cavity_transfer, ln_from_vacuum,
    nonrwa_transfer, BathMode, ModelKind, NoiseSource, ProtocolParams,
};
use qndmech_core::timebin::{extract_first_moments, simulate_converged, SimConfig};

const LN16: f64 = 2.772588722239781;

fn gains(kappa_tau: f64, k1: f64, k2: f64, s: f64) -> ProtocolParams {
    let mut p = ProtocolParams::from_gains(kappa_tau, 1.0, k1, k2);
    p.squeezing = s;
    p
}

fn fig2_preset(k1: f64, k2: f64, s: f64) -> ProtocolParams {
    let kappa = 2.0 * PI * 221.5e6;
    let tau = 4.5e-6;
    let mut p = ProtocolParams::from_gains(kappa, tau, k1, k2);
    p.squeezing = s;
    p
}

fn exact_adiabatic_ln(p: &ProtocolParams) -> f64 {
    ln_from_vacuum(&adiabatic_transfer(p, BathMode::Off).unwrap()).unwrap()
}

/// Criterion 1: the closed-form adiabatic estimate saturates at
/// `ln(2 K1 K2)` for high squeezing; at `S = 1e6`, `K1 = 1`, `K2 = 8` it
/// must sit within 1e-3 of `ln 16`. The exact adiabatic pipeline is
/// cross-reported: its asymptote carries the known `1/(4 P^2)` offset
/// above `ln 2P`, frozen here from its own closed form.
#[test]
fn criterion_01_asymptotic_ln() {
    let t0 = Instant::now();
    let p = gains(1000.0, 1.0, 8.0, 1e6);
    let estimate = approx_ln(&p).unwrap();
    let exact = exact_adiabatic_ln(&p);
    let sig = 64.0f64 + 0.5;
    let nu_sq = 0.5 * (sig - (sig * sig - 0.25).sqrt());
    let exact_expected = -0.5 * (4.0 * nu_sq).ln();
    let elapsed = t0.elapsed();
    let pass = (estimate - LN16).abs() <= 1e-3
        && (exact - exact_expected).abs() <= 1e-9
        && elapsed.as_secs_f64() < 1.0;
    println!(
        "criterion 1: {} - estimate {estimate:.9} vs ln16 {LN16:.9} (|d| = {:.1e}); \
         exact pipeline {exact:.9} vs its asymptote {exact_expected:.9}; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" },
        (estimate - LN16).abs(),
    );
    assert!((estimate - LN16).abs() <= 1e-3);
    assert!((exact - exact_expected).abs() <= 1e-9);
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
}

/// Criterion 2: accuracy band of the closed-form estimate over
/// `(K1, K2) in {1,2,4,8}^2`, `S in {5,10,20}`: within 5% of the exact
/// adiabatic value.
#[test]
fn criterion_02_estimate_accuracy_band() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut worst = (0.0f64, String::new());
    for &k1 in &[1.0, 2.0, 4.0, 8.0] {
        for &k2 in &[1.0, 2.0, 4.0, 8.0] {
            for &s in &[5.0, 10.0, 20.0] {
                let p = gains(1000.0, k1, k2, s);
                let exact = exact_adiabatic_ln(&p);
                let estimate = approx_ln(&p).unwrap().max(0.0);
                let rel = (exact - estimate).abs() / exact;
                if rel > worst.0 {
                    worst = (rel, format!("(K1={k1}, K2={k2}, S={s})"));
                }
                if rel > 0.05 {
                    failures.push(format!(
                        "  (K1={k1}, K2={k2}, S={s}): exact {exact:.5}, estimate {estimate:.5}, \
                         deviation {:.1}%",
                        100.0 * rel
                    ));
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = failures.is_empty() && elapsed.as_secs_f64() < 5.0;
    println!(
        "criterion 2: {} - worst deviation {:.1}% at {}; {} of 48 points out of band; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" },
        100.0 * worst.0,
        worst.1,
        failures.len(),
    );
    for f in &failures {
        println!("{f}");
    }
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?}");
    assert!(
        failures.is_empty(),
        "the closed-form estimate is derived for moderately strong coupling and its error at \
         K1 = K2 = 1 is ~22%, far outside the 5% band; see the failing points above"
    );
}

/// Criterion 3: with `K_f = K1 / sqrt(eta)` the mediator's amplitude
/// quadrature drops out of `q1` exactly.
#[test]
fn criterion_03_feedforward_cancellation() {
    let mut worst = 0.0f64;
    for &eta in &[1.0, 0.9, 0.5] {
        let mut p = gains(700.0, 1.4, 5.0, 3.7);
        p.eta = eta;
        p.k_f = p.cancellation_k_f();
        let m = adiabatic_transfer(&p, BathMode::Off).unwrap();
        let c = m
            .coefficient(NoiseSource::XInFlat, 0, Quadrature::Q)
            .unwrap();
        worst = worst.max(c.abs());
    }
    let pass = worst <= 1e-12;
    println!(
        "criterion 3: {} - largest residual X coefficient {worst:.2e} over eta in {{1, 0.9, 0.5}}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-12);
}

/// Criterion 4: the time-bin oracle against the adiabatic model at
/// `kappa tau = 1e3`, `K1 = 1`, `K2 = 8`, `S in {1, 2, 4.315}`.
#[test]
fn criterion_04_adiabatic_limit_equivalence() {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut failures = 0;
    for &s in &[1.0, 2.0, 4.315] {
        let p = gains(1000.0, 1.0, 8.0, s);
        let e_ad = exact_adiabatic_ln(&p);
        let mut cfg = SimConfig::new(p);
        cfg.n_bins = 1024;
        cfg.strict_checks = false;
        let sim = simulate_converged(&cfg, 1e-3, 1 << 17).unwrap();
        let gap = (sim.ln - e_ad).abs();
        if gap > 1e-2 {
            failures += 1;
        }
        rows.push(format!(
            "  S={s}: oracle {:.6} (N={}, |dE| = {:.1e}) vs adiabatic {:.6}, gap {:.4}",
            sim.ln,
            sim.n_bins.unwrap(),
            sim.convergence_estimate.unwrap(),
            e_ad,
            gap
        ));
    }
    let elapsed = t0.elapsed();
    let pass = failures == 0 && elapsed.as_secs_f64() < 120.0;
    println!(
        "criterion 4: {} - {failures} of 3 squeezing points exceed 1e-2; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    for r in &rows {
        println!("{r}");
    }
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:?}");
    assert!(
        failures == 0,
        "at kappa tau = 1e3 the intracavity memory leaves a genuine adiabatic-approximation \
         error of 1.0e-2 (S=2) and 4.1e-2 (S=4.315) in E - the oracle reproduces the full \
         dynamics, not the adiabatic limit, at these squeezing values; see rows above"
    );
}

/// Companion to criterion 4: the same comparison converges within the
/// tolerance once the pulse is long enough (`kappa tau = 1e4`).
#[test]
fn criterion_04b_adiabatic_limit_reached_at_longer_pulses() {
    let mut worst = 0.0f64;
    for &s in &[1.0, 2.0, 4.315] {
        let p = gains(10_000.0, 1.0, 8.0, s);
        let e_ad = exact_adiabatic_ln(&p);
        let mut cfg = SimConfig::new(p);
        cfg.n_bins = 1024;
        cfg.strict_checks = false;
        let sim = simulate_converged(&cfg, 1e-3, 1 << 17).unwrap();
        worst = worst.max((sim.ln - e_ad).abs());
    }
    println!("criterion 4 companion: PASS - worst oracle-vs-adiabatic gap {worst:.2e} at kappa tau = 1e4");
    assert!(worst <= 1e-2);
}

/// Criterion 5: oracle equivalence against the intracavity model at the
/// reported hardware point (`kappa / 2 pi = 221.5 MHz`, `tau = 4.5 us`,
/// no damping) with gains `(1, 8)`, plus first-moment probes against the
/// printed transfer coefficients.
#[test]
fn criterion_05_intracavity_equivalence() {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut worst_ln = 0.0f64;
    for &s in &[1.0, 2.0, 3.0, 4.315] {
        let p = fig2_preset(1.0, 8.0, s);
        let e_fc = ln_from_vacuum(&full_cavity_transfer(&p, BathMode::Off).unwrap()).unwrap();
        let mut cfg = SimConfig::new(p);
        cfg.n_bins = 2048;
        cfg.strict_checks = false;
        let sim = simulate_converged(&cfg, 1e-3, 1 << 17).unwrap();
        let gap = (sim.ln - e_fc).abs();
        worst_ln = worst_ln.max(gap);
        rows.push(format!(
            "  S={s}: oracle {:.6} (N={}) vs intracavity {:.6}, gap {:.1e}",
            sim.ln,
            sim.n_bins.unwrap(),
            e_fc,
            gap
        ));
    }

    // first-moment probes against the printed coefficients
    let p = fig2_preset(1.0, 8.0, 2.0);
    let t = p.kappa * p.tau;
    let et = (-t).exp();
    let (k1, k2, k_f) = (p.k1(), p.k2(), p.k_f);
    let expected_q1_q2 = k2 * k_f * (1.0 - (1.0 - et) / t);
    let expected_p2_p1 = -k1 * k2 * (1.0 + et - 2.0 / t * (1.0 - et));
    let mut cfg = SimConfig::new(p);
    cfg.n_bins = 1 << 15;
    cfg.strict_checks = false;
    let fm = extract_first_moments(&cfg).unwrap();
    let rel_a = ((fm.mech[(0, 2)] - expected_q1_q2) / expected_q1_q2).abs();
    let rel_b = ((fm.mech[(3, 1)] - expected_p2_p1) / expected_p2_p1).abs();

    let elapsed = t0.elapsed();
    let pass = worst_ln <= 1e-2 && rel_a <= 1e-3 && rel_b <= 1e-3 && elapsed.as_secs_f64() < 300.0;
    println!(
        "criterion 5: {} - worst LN gap {worst_ln:.1e}; probe q1<-q2 rel {rel_a:.1e}, \
         p2<-p1 rel {rel_b:.1e}; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    for r in &rows {
        println!("{r}");
    }
    assert!(worst_ln <= 1e-2);
    assert!(rel_a <= 1e-3 && rel_b <= 1e-3);
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?}");
}

/// Criterion 6: the closed-form bath estimate against the bath-on
/// adiabatic pipeline (exact-exponential variant) over
/// `Gamma in {0.01, 0.05, 0.1}`, `K in {1, 2, 4}`, `S in {1, 4.315}`,
/// within 5%; and its exact reduction at `Gamma = 0`.
#[test]
fn criterion_06_bath_formula() {
    let t0 = Instant::now();
    // Gamma = 0 reduces the bath estimate to the bath-free one exactly
    let p0 = gains(1000.0, 3.0, 3.0, 2.0);
    let reduction = (adiabatic_bath_ln(&p0).unwrap() - approx_ln(&p0).unwrap()).abs();

    let mut failures = Vec::new();
    let mut worst = (0.0f64, String::new());
    for &gamma_big in &[0.01, 0.05, 0.1] {
        for &k in &[1.0, 2.0, 4.0] {
            for &s in &[1.0, 4.315] {
                let mut p = gains(1000.0, k, k, s);
                p.gamma = 1e-4;
                p.n_th = gamma_big / (2.0 * p.gamma * p.tau);
                let formula = adiabatic_bath_ln(&p).unwrap().max(0.0);
                let oracle =
                    ln_from_vacuum(&adiabatic_transfer(&p, BathMode::ExactExponential).unwrap())
                        .unwrap();
                let rel = (formula - oracle).abs() / oracle.max(1e-30);
                if rel > worst.0 {
                    worst = (rel, format!("(Gamma={gamma_big}, K={k}, S={s})"));
                }
                if rel > 0.05 {
                    failures.push(format!(
                        "  (Gamma={gamma_big}, K={k}, S={s}): formula {formula:.5}, \
                         bath-on adiabatic {oracle:.5}, deviation {:.1}%",
                        100.0 * rel
                    ));
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = reduction <= 1e-12 && failures.is_empty();
    println!(
        "criterion 6: {} - Gamma=0 reduction residual {reduction:.1e}; worst deviation {:.1}% \
         at {}; {} of 18 points out of band; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" },
        100.0 * worst.0,
        worst.1,
        failures.len(),
    );
    for f in &failures {
        println!("{f}");
    }
    assert!(reduction <= 1e-12);
    assert!(
        failures.is_empty(),
        "the bath estimate inherits the closed form's moderately-strong-coupling assumption; \
         at K = 1 its error is 22-44% regardless of the bath strength; see rows above"
    );
}

/// Criterion 7: the intracavity solution never exceeds the adiabatic one,
/// and the squeezing at which it departs (1% of the adiabatic value) is
/// strictly larger for small `K1` than for large `K1`.
#[test]
fn criterion_07_deviation_onset_ordering() {
    let s_grid: Vec<f64> = (0..=28)
        .map(|i| 10.0f64.powf(0.5 * i as f64 / 28.0))
        .collect();
    let mut onsets = Vec::new();
    for &(k1, k2) in &[(1.0, 8.0), (8.0, 1.0)] {
        let mut onset = f64::INFINITY;
        for &s in &s_grid {
            let p = fig2_preset(k1, k2, s);
            let e_ad = exact_adiabatic_ln(&p);
            let e_fc = ln_from_vacuum(&full_cavity_transfer(&p, BathMode::Off).unwrap()).unwrap();
            assert!(
                e_fc <= e_ad + 1e-12,
                "intracavity {e_fc} above adiabatic {e_ad} at (K1={k1}, K2={k2}, S={s})"
            );
            if (e_ad - e_fc) > 0.01 * e_ad && s < onset {
                onset = s;
            }
        }
        onsets.push(onset);
    }
    let pass = onsets[0] > onsets[1];
    println!(
        "criterion 7: {} - 1% deviation onset at S = {:.3} for (K1=1, K2=8) vs S = {:.3} \
         for (K1=8, K2=1)",
        if pass { "PASS" } else { "FAIL" },
        onsets[0],
        onsets[1]
    );
    assert!(pass, "deviation onset ordering violated: {onsets:?}");
}

/// Criterion 8: monotonicity in the imperfections and the thermal
/// coupling threshold.
#[test]
fn criterion_08_monotonicity_and_threshold() {
    // E nondecreasing in eta
    let mut last = -1.0;
    for i in 0..10 {
        let mut p = gains(1000.0, 1.0, 8.0, 3.0);
        p.eta = 0.05 + 0.95 * i as f64 / 9.0;
        p.k_f = p.cancellation_k_f();
        let e = exact_adiabatic_ln(&p);
        assert!(e >= last - 1e-12, "E(eta) dropped at step {i}");
        last = e;
    }
    // E nonincreasing in n_th
    let mut last = f64::INFINITY;
    for i in 0..10 {
        let mut p = gains(1000.0, 1.0, 8.0, 3.0);
        p.gamma = 1e-4;
        p.n_th = 400.0 * i as f64;
        let e =
            ln_from_vacuum(&adiabatic_transfer(&p, BathMode::ExactExponential).unwrap()).unwrap();
        assert!(e <= last + 1e-12, "E(n_th) rose at step {i}");
        last = e;
    }
    // thermal occupation opens a coupling threshold
    let e_at = |k: f64| {
        let mut p = gains(1000.0, k, k, 2.0);
        p.gamma = 1e-3;
        p.n_th = 250.0; // Gamma = 0.5
        ln_from_vacuum(&adiabatic_transfer(&p, BathMode::ExactExponential).unwrap()).unwrap()
    };
    assert_eq!(
        e_at(0.05),
        0.0,
        "no threshold: entanglement at tiny coupling"
    );
    assert!(e_at(4.0) > 0.0, "no entanglement even at strong coupling");
    let (mut lo, mut hi) = (0.05f64, 4.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if e_at(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k_star = 0.5 * (lo + hi);
    let below = e_at(k_star - 1e-3);
    let above = e_at(k_star + 1e-3);
    let pass = below == 0.0 && above > 0.0;
    println!(
        "criterion 8: {} - monotone in eta and n_th; threshold K* = {k_star:.6} with \
         E(K*-1e-3) = {below} and E(K*+1e-3) = {above:.3e} at Gamma = 0.5",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 9: counter-rotating corrections at sideband resolution 0.04
/// only reduce the entanglement, by no more than 0.1 nats at
/// `(K1, K2) = (1, 8)`; and the adjoint-kernel model agrees with the
/// RWA-off time-bin walk.
#[test]
fn criterion_09_beyond_rwa() {
    let t0 = Instant::now();
    let mut max_gap = 0.0f64;
    let mut rows = Vec::new();
    for i in 0..=6 {
        let db = 12.7 * i as f64 / 6.0;
        let s = 10.0f64.powf(db / 20.0);
        let mut p = fig2_preset(1.0, 8.0, s);
        p.omega_m = 25.0 * p.kappa;
        let e_rwa = ln_from_vacuum(&full_cavity_transfer(&p, BathMode::Off).unwrap()).unwrap();
        let e_non = ln_from_vacuum(&nonrwa_transfer(&p).unwrap()).unwrap();
        assert!(
            e_non <= e_rwa + 1e-9,
            "back-action increased E at {db:.1} dB: {e_non} vs {e_rwa}"
        );
        let gap = e_rwa - e_non;
        max_gap = max_gap.max(gap);
        rows.push(format!(
            "  {db:.2} dB: E_rwa {e_rwa:.6}, E_nonrwa {e_non:.6}, gap {gap:.2e}"
        ));
    }

    // dual-route check at a matched moderate pulse
    let mut p = ProtocolParams::from_gains(20.0, 1.0, 1.0, 8.0);
    p.omega_m = 25.0 * p.kappa;
    p.squeezing = 2.0;
    let e_model = ln_from_vacuum(&nonrwa_transfer(&p).unwrap()).unwrap();
    let mut cfg = SimConfig::new(p);
    cfg.rwa = false;
    cfg.strict_checks = false;
    cfg.n_bins = 8192;
    let sim = simulate_converged(&cfg, 2e-3, 1 << 16).unwrap();
    let route_gap = (sim.ln - e_model).abs();

    let elapsed = t0.elapsed();
    let pass = max_gap <= 0.1 && route_gap <= 1e-2;
    println!(
        "criterion 9: {} - max RWA overestimate {max_gap:.4} nats (bound 0.1); \
         adjoint-kernel vs time-bin gap {route_gap:.1e}; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    for r in &rows {
        println!("{r}");
    }
    assert!(max_gap <= 0.1);
    assert!(route_gap <= 1e-2);
}

/// Criterion 10: bulk randomized invariants.
#[test]
fn criterion_10_invariant_suite() {
    let t0 = Instant::now();
    // deterministic xorshift-style stream
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    // 1e4 random symplectic constructions
    let mut worst_residual = 0.0f64;
    for _ in 0..10_000 {
        let s = (2.0 * (next() - 0.5)).exp();
        let theta = std::f64::consts::TAU * next();
        let eta = next();
        let k = 4.0 * (next() - 0.5);
        let rot = SymplecticMap::new(
            DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]),
            vec![0],
        )
        .unwrap();
        let sq = squeeze_map(s, 1).unwrap();
        let bs = beamsplitter_map(eta, 0, 1).unwrap();
        let qn = qnd_map(k, 0, Quadrature::P, 1, Quadrature::Q).unwrap();
        let mut total = DMatrix::identity(4, 4);
        let embed = |m: &SymplecticMap, mode: usize, into: &mut DMatrix<f64>| {
            let mut f = DMatrix::identity(4, 4);
            for r in 0..2 {
                for c in 0..2 {
                    f[(2 * mode + r, 2 * mode + c)] = m.matrix()[(r, c)];
                }
            }
            *into = &f * into.clone();
        };
        embed(&rot, 0, &mut total);
        embed(&sq, 1, &mut total);
        total = bs.matrix() * total;
        total = qn.matrix() * total;
        worst_residual = worst_residual.max(symplectic_residual(&total));
    }

    // 1e3 randomized protocol evaluations preserve physicality
    let mut worst_eig = f64::INFINITY;
    for _ in 0..1_000 {
        let mut p = gains(
            10.0 + 3000.0 * next(),
            6.0 * next(),
            6.0 * next(),
            10.0f64.powf(12.7 * next() / 20.0),
        );
        p.eta = 0.05 + 0.95 * next();
        p.k_f = 3.0 * next();
        let bath = if next() > 0.5 {
            p.gamma = 1e-4 * next();
            p.n_th = 100.0 * next();
            BathMode::ExactExponential
        } else {
            BathMode::Off
        };
        let model = if next() > 0.5 {
            adiabatic_transfer(&p, bath).unwrap()
        } else {
            full_cavity_transfer(&p, bath).unwrap()
        };
        let vac = GaussianState::vacuum(2).unwrap();
        let cov = &model.a * vac.cov() * model.a.transpose() + &model.n;
        worst_eig = worst_eig.min(physicality_check(&cov).unwrap().min_eigenvalue);
    }

    // feedforward at the optimal gain reproduces homodyne conditioning
    let mut worst_ff = 0.0f64;
    for _ in 0..100 {
        let mut st = GaussianState::vacuum(2).unwrap();
        let s0 = (2.0 * (next() - 0.5)).exp();
        let s1 = (2.0 * (next() - 0.5)).exp();
        st = apply_symplectic(&st, &squeeze_map(s0, 0).unwrap()).unwrap();
        st = apply_symplectic(&st, &squeeze_map(s1, 1).unwrap()).unwrap();
        st = apply_symplectic(&st, &beamsplitter_map(next(), 0, 1).unwrap()).unwrap();
        let j = Quadrature::Q.index(0);
        let t = Quadrature::Q.index(1);
        let gain = -st.cov()[(t, j)] / st.cov()[(j, j)];
        let ff = feedforward_displace(&st, 0, Quadrature::Q, gain, 1, Quadrature::Q).unwrap();
        let cond = homodyne_condition(&st, 0, Quadrature::Q, 0.0).unwrap();
        let d = (ff.cov() - cond.cov())
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        worst_ff = worst_ff.max(d);
    }

    let elapsed = t0.elapsed();
    let pass = worst_residual <= 1e-12 && worst_eig >= -1e-10 && worst_ff <= 1e-10;
    println!(
        "criterion 10: {} - 1e4 symplectic residual max {worst_residual:.1e}; 1e3 protocol \
         evaluations min eig {worst_eig:.1e}; feedforward-vs-conditioning max {worst_ff:.1e}; \
         runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst_residual <= 1e-12);
    assert!(worst_eig >= -1e-10);
    assert!(worst_ff <= 1e-10);
}

/// Criterion 11: optimiser sanity on the lossless bath-free benchmark.
#[test]
fn criterion_11_optimizer_sanity() {
    let t0 = Instant::now();
    let base = ProtocolParams::from_gains(1.0, 1.0, 0.0, 0.0);
    let mut last_e = -1.0;
    let mut prev: Option<qndmech_core::optimize::OptimizationResult> = None;
    let mut ratios = Vec::new();
    let mut kappa_taus = Vec::new();
    for i in 0..10 {
        let g = 0.002 * 10.0f64.powf(1.8 * i as f64 / 9.0);
        let mut space = SearchSpace::new(base.clone(), ModelKind::FullCavity, g);
        space.tau_bounds = (1.0, 2000.0);
        space.n_seeds = 64;
        space.n_refine = 2;
        space.seed = 11;
        let extra = match &prev {
            Some(r) => {
                let mut u = r.best_unit;
                let k_max = space.k_max(r.best.tau);
                u[1] = (r.best.k1 / k_max).min(1.0);
                u[2] = (r.best.k2 / k_max).min(1.0);
                vec![u]
            }
            None => vec![],
        };
        let out = optimize_seeded(&space, &extra).unwrap();
        assert!(
            out.best_ln >= last_e - 1e-9,
            "ladder dropped at rung {i}: {} < {last_e}",
            out.best_ln
        );
        last_e = out.best_ln;
        ratios.push(out.best.k_f / out.best.k1);
        kappa_taus.push(out.best.tau * base.kappa);
        prev = Some(out);
    }
    // the pure-QND structure of the optimum on the final (strongest) rung
    let final_ratio = *ratios.last().unwrap();
    let final_kt = *kappa_taus.last().unwrap();
    let elapsed = t0.elapsed();
    let pass = (0.99..=1.01).contains(&final_ratio) && final_kt >= 10.0;
    println!(
        "criterion 11: {} - E*(g_max) ladder nondecreasing over 10 rungs (top {last_e:.4}); \
         optimum K_f/K1 = {final_ratio:.5}, kappa tau = {final_kt:.1}; runtime {elapsed:?}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(
        (0.99..=1.01).contains(&final_ratio),
        "K_f/K1 = {final_ratio}"
    );
    assert!(final_kt >= 10.0, "kappa tau = {final_kt}");
}
