//! The `simulate`, `optimize` and `sweep` commands.

use std::fmt::Write as _;
use std::path::Path;

use qndmech_core::optimize::{optimize_seeded, GridSpec, KfRule, OptimizationResult, SearchSpace};
use qndmech_core::protocol::{ln_from_transfer, transfer, ModelKind};
use qndmech_core::timebin::{simulate_converged, SimConfig};
use qndmech_core::GaussianState;

use crate::config::RunConfig;
use crate::csvout::{format_f64, CsvWriter};
use crate::{s_to_db, CliResult};

fn model_tag(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::AdiabaticIdeal => "adiabatic",
        ModelKind::FullCavity => "full-cavity",
        ModelKind::NonRwa => "non-rwa",
    }
}

/// Single-point run: prints the coefficient table, the final mechanical
/// covariance and the entanglement of the selected model, with an
/// optional time-bin cross-check.
pub fn cmd_simulate(cfg: &RunConfig, oracle: bool) -> CliResult<String> {
    let params = cfg.protocol_params()?;
    let kind = cfg.model_kind()?;
    let bath = cfg.bath_mode()?;
    let model = transfer(kind, bath, &params)?;
    let result = ln_from_transfer(&model, &GaussianState::vacuum(2)?)?;

    let mut out = String::new();
    let _ = writeln!(out, "model: {} (bath {:?})", model_tag(kind), bath);
    let _ = writeln!(
        out,
        "parameters: kappa*tau = {:.6e}, K1 = {:.6}, K2 = {:.6}, K_f = {:.6}, S = {:.6} \
         ({:.2} dB), eta = {}, n_th = {}",
        params.kappa * params.tau,
        params.k1(),
        params.k2(),
        params.k_f,
        params.squeezing,
        s_to_db(params.squeezing),
        params.eta,
        params.n_th,
    );
    let _ = writeln!(out, "noise coefficients:");
    for c in &result.coefficients {
        let _ = writeln!(
            out,
            "  {:?} -> {}{} : {}",
            c.source,
            if c.quad == qndmech_core::Quadrature::Q {
                "q"
            } else {
                "p"
            },
            c.mode + 1,
            format_f64(c.value)
        );
    }
    let _ = writeln!(out, "final mechanical covariance (q1, p1, q2, p2):");
    for r in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|c| format!("{:>14.6e}", result.mech_cov[(r, c)]))
            .collect();
        let _ = writeln!(out, "  [{}]", row.join(", "));
    }
    let _ = writeln!(
        out,
        "min eig(V + i/2 Omega) = {:.3e}",
        result.min_eigenvalue
    );
    let _ = writeln!(out, "logarithmic negativity E = {}", format_f64(result.ln));

    if oracle {
        let mut sim_cfg = SimConfig::new(params);
        sim_cfg.n_bins = 1024;
        sim_cfg.strict_checks = false;
        sim_cfg.rwa = kind != ModelKind::NonRwa;
        sim_cfg.bath = bath.is_on();
        let sim = simulate_converged(&sim_cfg, 1e-3, 1 << 17)?;
        let _ = writeln!(
            out,
            "time-bin oracle: E = {} at N = {} (|E(2N)-E(N)| = {:.1e}); model gap = {:.3e}",
            format_f64(sim.ln),
            sim.n_bins.unwrap_or(0),
            sim.convergence_estimate.unwrap_or(f64::NAN),
            (sim.ln - result.ln).abs()
        );
    }
    Ok(out)
}

fn search_space(cfg: &RunConfig, seed: u64) -> CliResult<SearchSpace> {
    let base = cfg.protocol_params()?;
    let kind = cfg.model_kind()?;
    let g_max = cfg.f64_or("optimize", "g_max_over_kappa", 0.05)?;
    let mut space = SearchSpace::new(base.clone(), kind, g_max);
    space.bath = cfg.bath_mode()?;
    let kt_min = cfg.f64_or("optimize", "kappa_tau_min", 1.0)?;
    let kt_max = cfg.f64_or("optimize", "kappa_tau_max", 2000.0)?;
    space.tau_bounds = (kt_min / base.kappa, kt_max / base.kappa);
    space.squeezing_db_bounds = (0.0, cfg.f64_or("optimize", "squeezing_db_max", 12.7)?);
    space.n_seeds = cfg.usize_or("optimize", "n_seeds", 96)?;
    space.n_refine = cfg.usize_or("optimize", "n_refine", 3)?;
    space.seed = seed;
    Ok(space)
}

/// Run the optimiser (single ceiling or a ladder) and persist the search
/// trace plus a human-readable summary.
pub fn cmd_optimize(cfg: &RunConfig, out_dir: &Path, seed: u64) -> CliResult<String> {
    let ladder = cfg.list_opt("optimize", "g_max_ladder")?;
    let mut summary = String::new();
    let command = format!("optimize --seed {seed}");

    let mut trace_csv = CsvWriter::new(
        &command,
        cfg.hash,
        &[
            "g_max_over_kappa",
            "tau_s",
            "k1",
            "k2",
            "k_f",
            "squeezing_db",
            "e",
        ],
    );
    let mut ladder_csv = CsvWriter::new(
        &command,
        cfg.hash,
        &[
            "g_max_over_kappa",
            "e_star",
            "tau_s",
            "k1",
            "k2",
            "k_f",
            "squeezing_db",
            "evaluations",
        ],
    );

    let rungs = ladder.unwrap_or(vec![cfg.f64_or("optimize", "g_max_over_kappa", 0.05)?]);
    let mut prev: Option<OptimizationResult> = None;
    for &g in &rungs {
        let mut space = search_space(cfg, seed)?;
        space.g_max_over_kappa = g;
        let extra = match &prev {
            Some(r) => {
                let mut u = r.best_unit;
                let k_max = space.k_max(r.best.tau);
                if k_max > 0.0 {
                    u[1] = (r.best.k1 / k_max).min(1.0);
                    u[2] = (r.best.k2 / k_max).min(1.0);
                }
                vec![u]
            }
            None => vec![],
        };
        let out = optimize_seeded(&space, &extra)?;
        for (p, v) in &out.trace {
            trace_csv.row_numbers(&[g, p.tau, p.k1, p.k2, p.k_f, s_to_db(p.squeezing), *v]);
        }
        ladder_csv.row_numbers(&[
            g,
            out.best_ln,
            out.best.tau,
            out.best.k1,
            out.best.k2,
            out.best.k_f,
            s_to_db(out.best.squeezing),
            out.evaluations as f64,
        ]);
        let _ = writeln!(
            summary,
            "g_max/kappa = {g}: E* = {} at tau = {:.6e} s (kappa tau = {:.3e}), K1 = {:.6}, \
             K2 = {:.6}, K_f = {:.6}, S = {:.4} ({:.2} dB), {} evaluations",
            format_f64(out.best_ln),
            out.best.tau,
            out.best.tau * space.base.kappa,
            out.best.k1,
            out.best.k2,
            out.best.k_f,
            out.best.squeezing,
            s_to_db(out.best.squeezing),
            out.evaluations
        );
        prev = Some(out);
    }

    trace_csv.write_to(&out_dir.join("optimize_trace.csv"))?;
    ladder_csv.write_to(&out_dir.join("optimize_result.csv"))?;
    let header = format!(
        "# qndmech {} | command: {command} | config: fnv64:{:016x}\n",
        crate::VERSION,
        cfg.hash
    );
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("optimize_summary.txt"),
        format!("{header}{summary}"),
    )?;
    Ok(summary)
}

/// Dense grid evaluation, written as one CSV.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> CliResult<String> {
    let base = cfg.protocol_params()?;
    let kind = cfg.model_kind()?;
    // sweeps are figure-data generation: no coupling ceiling
    let mut space = SearchSpace::new(base.clone(), kind, 1e30);
    space.bath = cfg.bath_mode()?;

    let tau_us = cfg
        .list_opt("sweep", "tau_us")?
        .unwrap_or(vec![base.tau * 1e6]);
    let grid = GridSpec {
        tau: tau_us.iter().map(|t| t * 1e-6).collect(),
        k1: cfg.list_opt("sweep", "k1")?.unwrap_or(vec![base.k1()]),
        k2: cfg.list_opt("sweep", "k2")?.unwrap_or(vec![base.k2()]),
        squeezing: cfg
            .list_opt("sweep", "squeezing_db")?
            .unwrap_or(vec![s_to_db(base.squeezing)])
            .iter()
            .map(|db| crate::db_to_s(*db))
            .collect(),
        k_f: match cfg.string_opt("sweep", "k_f") {
            None => KfRule::Cancellation,
            Some(v) if v.eq_ignore_ascii_case("cancel") => KfRule::Cancellation,
            Some(_) => KfRule::Fixed(cfg.list_opt("sweep", "k_f")?.unwrap()),
        },
    };
    let rows = qndmech_core::optimize::sweep(&space, &grid)?;

    let mut csv = CsvWriter::new(
        "sweep",
        cfg.hash,
        &["tau_s", "k1", "k2", "k_f", "squeezing_db", "e", "model"],
    );
    for row in &rows {
        csv.row_numbers_tagged(
            &[
                row.point.tau,
                row.point.k1,
                row.point.k2,
                row.point.k_f,
                s_to_db(row.point.squeezing),
                row.ln.unwrap_or(f64::NAN),
            ],
            model_tag(kind),
        );
    }
    csv.write_to(&out_dir.join("sweep.csv"))?;
    Ok(format!(
        "sweep: {} points -> {}\n",
        rows.len(),
        out_dir.join("sweep.csv").display()
    ))
}
