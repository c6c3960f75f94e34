//! Figure-reproduction commands: entanglement-vs-squeezing families, the
//! bath/loss grid, the coupling-ceiling optimisation ladder, and the
//! counter-rotating comparison. Each figure writes one CSV per curve plus
//! a combined SVG chart.

use std::f64::consts::PI;
use std::path::Path;

use qndmech_core::optimize::{optimize_seeded, OptimizationResult, SearchSpace};
use qndmech_core::protocol::{
    adiabatic_transfer, full_cavity_transfer, ln_from_vacuum, nonrwa_transfer, BathMode, ModelKind,
    ProtocolParams,
};

use crate::config::RunConfig;
use crate::csvout::CsvWriter;
use crate::svg::{Chart, Curve};
use crate::{db_to_s, CliError, CliResult};

const SQUEEZING_BOUND_DB: f64 = 12.7;

fn s_grid(cfg: &RunConfig, default_max: f64, default_points: usize) -> CliResult<Vec<f64>> {
    let max = cfg.f64_or("figure", "squeezing_db_max", default_max)?;
    let points = cfg
        .usize_or("figure", "squeezing_db_points", default_points)?
        .max(2);
    Ok((0..points)
        .map(|i| max * i as f64 / (points - 1) as f64)
        .collect())
}

fn curve_csv(
    command: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    name: &str,
    tag: &str,
    points: &[(f64, f64)],
) -> CliResult<()> {
    let mut csv = CsvWriter::new(command, cfg.hash, &["squeezing_db", "e", "model"]);
    for &(db, e) in points {
        csv.row_numbers_tagged(&[db, e], tag);
    }
    csv.write_to(&out_dir.join(name))
}

/// Entanglement against presqueezing for three gain ratios, adiabatic and
/// intracavity solutions side by side.
pub fn fig2(cfg: &RunConfig, out_dir: &Path) -> CliResult<String> {
    let base = cfg.protocol_params()?;
    let grid = s_grid(cfg, 18.0, 37)?;
    let pairs = [(1.0, 1.0), (1.0, 8.0), (8.0, 1.0)];
    let mut chart = Chart::new(
        "Mechanical entanglement vs input squeezing",
        "squeezing (dB)",
        "logarithmic negativity",
    );
    chart.markers.push((SQUEEZING_BOUND_DB, "12.7 dB".into()));
    let mut files = Vec::new();
    for &(k1, k2) in &pairs {
        for (kind, dashed) in [
            (ModelKind::AdiabaticIdeal, false),
            (ModelKind::FullCavity, true),
        ] {
            let mut points = Vec::new();
            for &db in &grid {
                let mut p = ProtocolParams::from_gains(base.kappa, base.tau, k1, k2);
                p.squeezing = db_to_s(db);
                let model = match kind {
                    ModelKind::AdiabaticIdeal => adiabatic_transfer(&p, BathMode::Off)?,
                    _ => full_cavity_transfer(&p, BathMode::Off)?,
                };
                points.push((db, ln_from_vacuum(&model)?));
            }
            let tag = match kind {
                ModelKind::AdiabaticIdeal => "adiabatic",
                _ => "full-cavity",
            };
            let name = format!("fig2_{tag}_k1_{k1}_k2_{k2}.csv");
            curve_csv("figure fig2", cfg, out_dir, &name, tag, &points)?;
            files.push(name);
            chart.curves.push(Curve {
                label: format!("K1={k1}, K2={k2} ({tag})"),
                points,
                dashed,
            });
        }
    }
    chart.write_to(&out_dir.join("fig2.svg"))?;
    files.push("fig2.svg".into());
    Ok(report("fig2", out_dir, &files))
}

/// Entanglement against squeezing for one gain pair under combinations of
/// bath occupation and link transmittivity.
pub fn fig3(cfg: &RunConfig, out_dir: &Path) -> CliResult<String> {
    let base = cfg.protocol_params()?;
    let grid = s_grid(cfg, 18.0, 37)?;
    let combos = [
        (0.0, 1.0),
        (1.0, 1.0),
        (3.0, 1.0),
        (0.0, 0.9),
        (1.0, 0.9),
        (3.0, 0.9),
    ];
    let mut chart = Chart::new(
        "Entanglement under mechanical bath and link loss (K1=1, K2=8)",
        "squeezing (dB)",
        "logarithmic negativity",
    );
    chart.markers.push((SQUEEZING_BOUND_DB, "12.7 dB".into()));
    let mut files = Vec::new();
    for &(n_th, eta) in &combos {
        let mut points = Vec::new();
        for &db in &grid {
            let mut p = ProtocolParams::from_gains(base.kappa, base.tau, 1.0, 8.0);
            p.gamma = base.gamma;
            p.n_th = n_th;
            p.eta = eta;
            p.k_f = p.cancellation_k_f();
            p.squeezing = db_to_s(db);
            let model = full_cavity_transfer(&p, BathMode::ExactExponential)?;
            points.push((db, ln_from_vacuum(&model)?));
        }
        let name = format!("fig3_nth_{n_th}_eta_{eta}.csv");
        curve_csv(
            "figure fig3",
            cfg,
            out_dir,
            &name,
            "full-cavity+bath",
            &points,
        )?;
        files.push(name);
        chart.curves.push(Curve {
            label: format!("n_th={n_th}, eta={eta}"),
            points,
            dashed: eta < 1.0,
        });
    }
    chart.write_to(&out_dir.join("fig3.svg"))?;
    files.push("fig3.svg".into());
    Ok(report("fig3", out_dir, &files))
}

struct Platform {
    label: &'static str,
    params: ProtocolParams,
}

/// Maximal entanglement against the coupling ceiling for the built-in
/// optomechanical hardware and, when configured, a user-supplied
/// electromechanical platform; each with and without input squeezing.
pub fn fig4(cfg: &RunConfig, out_dir: &Path, seed: u64) -> CliResult<String> {
    let base = cfg.protocol_params()?;
    let mut platforms = vec![Platform {
        label: "optomechanical",
        params: base.clone(),
    }];

    if cfg.bool_or("figure", "electromechanical", false)? || cfg.has_section("electromechanical") {
        let mut missing = Vec::new();
        for key in ["kappa_over_2pi_hz", "gamma_over_2pi_hz", "n_th"] {
            if cfg.f64_opt("electromechanical", key)?.is_none() {
                missing.push(key.to_string());
            }
        }
        if !missing.is_empty() {
            return Err(CliError::MissingKeys {
                section: "electromechanical".into(),
                keys: missing,
            });
        }
        let mut em = base.clone();
        em.kappa = 2.0
            * PI
            * cfg
                .f64_opt("electromechanical", "kappa_over_2pi_hz")?
                .unwrap();
        em.gamma = 2.0
            * PI
            * cfg
                .f64_opt("electromechanical", "gamma_over_2pi_hz")?
                .unwrap();
        em.omega_m = 2.0 * PI * cfg.f64_or("electromechanical", "omega_m_over_2pi_hz", 0.0)?;
        em.n_th = cfg.f64_opt("electromechanical", "n_th")?.unwrap();
        em.eta = cfg.f64_or("electromechanical", "eta", 1.0)?;
        platforms.push(Platform {
            label: "electromechanical",
            params: em,
        });
    }

    let g_points = cfg.usize_or("figure", "g_points", 10)?.max(2);
    let ladder: Vec<f64> = (0..g_points)
        .map(|i| 2e-3 * (0.3f64 / 2e-3).powf(i as f64 / (g_points - 1) as f64))
        .collect();

    let mut chart = Chart::new(
        "Maximal entanglement vs coupling ceiling",
        "g / kappa",
        "optimised logarithmic negativity",
    );
    chart.log_x = true;
    let mut files = Vec::new();
    for platform in &platforms {
        for (squeezed, cap_db) in [(true, SQUEEZING_BOUND_DB), (false, 0.0)] {
            let mut points = Vec::new();
            let mut prev: Option<OptimizationResult> = None;
            for &g in &ladder {
                let mut space = SearchSpace::new(platform.params.clone(), ModelKind::FullCavity, g);
                space.bath = if platform.params.n_th > 0.0 {
                    BathMode::ExactExponential
                } else {
                    BathMode::Off
                };
                space.tau_bounds = (1.0 / platform.params.kappa, 2000.0 / platform.params.kappa);
                space.squeezing_db_bounds = (0.0, cap_db);
                space.seed = seed;
                space.n_seeds = 48;
                space.n_refine = 2;
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
                points.push((g, out.best_ln.max(0.0)));
                prev = Some(out);
            }
            let tag = format!(
                "{}-{}",
                platform.label,
                if squeezed { "squeezed" } else { "coherent" }
            );
            let mut csv = CsvWriter::new(
                "figure fig4",
                cfg.hash,
                &["g_over_kappa", "e_star", "model"],
            );
            for &(g, e) in &points {
                csv.row_numbers_tagged(&[g, e], &tag);
            }
            let name = format!("fig4_{tag}.csv");
            csv.write_to(&out_dir.join(&name))?;
            files.push(name);
            chart.curves.push(Curve {
                label: tag,
                points,
                dashed: !squeezed,
            });
        }
    }
    chart.write_to(&out_dir.join("fig4.svg"))?;
    files.push("fig4.svg".into());
    Ok(report("fig4", out_dir, &files))
}

/// Rotating-wave vs counter-rotating solutions at sideband resolution
/// `kappa / omega_m = 0.04`.
pub fn fig5(cfg: &RunConfig, out_dir: &Path) -> CliResult<String> {
    let base = cfg.protocol_params()?;
    let grid = s_grid(cfg, SQUEEZING_BOUND_DB, 11)?;
    let pairs = [(1.0, 8.0), (8.0, 1.0)];
    let mut chart = Chart::new(
        "Entanglement with and without the rotating-wave approximation",
        "squeezing (dB)",
        "logarithmic negativity",
    );
    chart.markers.push((SQUEEZING_BOUND_DB, "12.7 dB".into()));
    let mut files = Vec::new();
    for &(k1, k2) in &pairs {
        let mut rwa_points = Vec::new();
        let mut non_points = Vec::new();
        for &db in &grid {
            let mut p = ProtocolParams::from_gains(base.kappa, base.tau, k1, k2);
            p.squeezing = db_to_s(db);
            p.omega_m = if base.omega_m > 0.0 {
                base.omega_m
            } else {
                25.0 * p.kappa
            };
            rwa_points.push((
                db,
                ln_from_vacuum(&full_cavity_transfer(&p, BathMode::Off)?)?,
            ));
            non_points.push((db, ln_from_vacuum(&nonrwa_transfer(&p)?)?));
        }
        for (tag, points, dashed) in [("rwa", &rwa_points, true), ("non-rwa", &non_points, false)] {
            let name = format!("fig5_{tag}_k1_{k1}_k2_{k2}.csv");
            curve_csv("figure fig5", cfg, out_dir, &name, tag, points)?;
            files.push(name);
            chart.curves.push(Curve {
                label: format!("K1={k1}, K2={k2} ({tag})"),
                points: points.clone(),
                dashed,
            });
        }
    }
    chart.write_to(&out_dir.join("fig5.svg"))?;
    files.push("fig5.svg".into());
    Ok(report("fig5", out_dir, &files))
}

fn report(which: &str, out_dir: &Path, files: &[String]) -> String {
    let mut out = format!(
        "{which}: wrote {} files to {}\n",
        files.len(),
        out_dir.display()
    );
    for f in files {
        out.push_str("  ");
        out.push_str(f);
        out.push('\n');
    }
    out
}
