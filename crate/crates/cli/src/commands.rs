use std::f64::consts::PI;

use bkflow_core::scattering::{lipschitz_estimate, smooth_kernel_z};
use bkflow_core::specflow::naive_crossing_count;
use bkflow_core::ssf::trace_formula;
use bkflow_core::xi::{
    ssf_smoothed, ssf_smoothed_grid, verify_bk, verify_e1, verify_gap, verify_thm0, xi_truncated, E1Options, Verdict,
    DEFAULT_L_SWEEP,
};
use bkflow_core::{
    counting, eigvalsh, s_matrix, s_matrix_stationary, ssf_finite, xi_finite, BandInterval, HermitianMatrix,
    LatticePotential, Result, SeededRng, TestFunction, UnitaryFamily,
};
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig, Model};

/// CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub verdict: Verdict,
    pub data: Value,
    pub table: Option<Table>,
}

fn cell<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

const DEFAULT_BOX: usize = 800;

pub fn run(cfg: &ExperimentConfig, command: Command) -> Result<Outcome> {
    match command {
        Command::Index => index(cfg),
        Command::Ssf => ssf(cfg),
        Command::Scatter => scatter(cfg),
        Command::Flow => flow(cfg),
        Command::VerifyThm0 => thm0(cfg),
        Command::VerifyE1 => e1(cfg),
        Command::VerifyBk => bk(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn lattice(cfg: &ExperimentConfig) -> LatticePotential {
    cfg.potential().expect("validated lattice model")
}

fn l_sweep(cfg: &ExperimentConfig) -> Vec<usize> {
    cfg.params.l_sweep.clone().unwrap_or_else(|| DEFAULT_L_SWEEP.to_vec())
}

struct MatrixPair {
    a: HermitianMatrix,
    b: HermitianMatrix,
}

fn matrix_pair(cfg: &ExperimentConfig) -> Option<MatrixPair> {
    match cfg.model {
        Model::RandomMatrix { dim, rank } => {
            let mut rng = SeededRng::new(cfg.seed, 0);
            let a = rng.hermitian(dim);
            let v = rng.low_rank_hermitian(dim, rank);
            let b = a.try_add(&v).expect("equal dimensions");
            Some(MatrixPair { a, b })
        }
        _ => None,
    }
}

/// Given `λ`, or `probes` energies drawn from stream 1 over the spectral
/// hull widened by 1.
fn probes(cfg: &ExperimentConfig, pair: &MatrixPair) -> Result<Vec<f64>> {
    if let Some(l) = cfg.params.lambda {
        return Ok(vec![l]);
    }
    let ea = eigvalsh(&pair.a)?;
    let eb = eigvalsh(&pair.b)?;
    let lo = ea[0].min(eb[0]) - 1.0;
    let hi = ea[ea.len() - 1].max(eb[eb.len() - 1]) + 1.0;
    let mut rng = SeededRng::new(cfg.seed, 1);
    Ok((0..cfg.params.probes).map(|_| rng.uniform(lo, hi)).collect())
}

fn index(cfg: &ExperimentConfig) -> Result<Outcome> {
    if let Some(pair) = matrix_pair(cfg) {
        let mut table = Table::new(&["lambda", "xi", "ssf", "direct"]);
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        let mut ok = true;
        for lambda in probes(cfg, &pair)? {
            match (xi_finite(&pair.a, &pair.b, lambda), ssf_finite(&pair.a, &pair.b, lambda)) {
                (Ok(x), Ok(s)) => {
                    let direct = counting(&pair.a, lambda)? as i64 - counting(&pair.b, lambda)? as i64;
                    ok &= x == s && s == direct;
                    table.push(vec![cell(lambda), cell(x), cell(s), cell(direct)]);
                    rows.push(json!({"lambda": lambda, "xi": x, "ssf": s, "direct": direct}));
                }
                (Err(e), _) | (_, Err(e)) => skipped.push(json!({"lambda": lambda, "reason": e.to_string()})),
            }
        }
        let verdict = if rows.is_empty() {
            Verdict::Indeterminate("every probe was rejected".into())
        } else {
            Verdict::from_bool(ok)
        };
        return Ok(Outcome {
            verdict,
            data: json!({"probes": rows, "skipped": skipped}),
            table: Some(table),
        });
    }
    let pot = lattice(cfg);
    let lambda = cfg.params.lambda.expect("validated");
    let est = xi_truncated(&pot, lambda, &l_sweep(cfg), cfg.params.delta_sweep.as_deref())?;
    let mut table = Table::new(&["l", "delta", "plus", "minus", "value"]);
    for p in &est.sweep {
        table.push(vec![cell(p.l), cell(p.delta), cell(p.plus), cell(p.minus), cell(p.value)]);
    }
    let verdict = if est.stable {
        Verdict::Pass
    } else {
        Verdict::Indeterminate("Ξ unstable across the (L, δ) sweep".into())
    };
    Ok(Outcome {
        verdict,
        data: json!({"estimate": est}),
        table: Some(table),
    })
}

fn ssf(cfg: &ExperimentConfig) -> Result<Outcome> {
    if let Some(pair) = matrix_pair(cfg) {
        let tol = cfg.params.tolerance.unwrap_or(1e-6);
        let ea = eigvalsh(&pair.a)?;
        let eb = eigvalsh(&pair.b)?;
        let lo = ea[0].min(eb[0]) - 1.0;
        let hi = ea[ea.len() - 1].max(eb[eb.len() - 1]) + 1.0;
        let mut reports = Vec::new();
        let mut worst = 0.0_f64;
        for phi in TestFunction::family(lo, hi) {
            let r = trace_formula(&pair.a, &pair.b, &phi, cfg.params.quadrature_points)?;
            worst = worst.max(r.residual);
            reports.push(json!({"phi": phi, "report": r}));
        }
        let mut table = Table::new(&["lambda", "ssf"]);
        let mut values = Vec::new();
        for lambda in probes(cfg, &pair)? {
            if let Ok(s) = ssf_finite(&pair.a, &pair.b, lambda) {
                table.push(vec![cell(lambda), cell(s)]);
                values.push(json!([lambda, s]));
            }
        }
        return Ok(Outcome {
            verdict: Verdict::from_bool(worst <= tol),
            data: json!({"trace_formula": reports, "max_residual": worst, "tolerance": tol, "ssf": values}),
            table: Some(table),
        });
    }
    let pot = lattice(cfg);
    let lambda = cfg.params.lambda.expect("validated");
    let l = cfg.params.l.unwrap_or(DEFAULT_BOX);
    let w = cfg.params.w;
    let exact = ssf_smoothed(&pot, lambda, l, w)?;
    let grid = ssf_smoothed_grid(&pot, lambda, l, w, cfg.params.points.max(200))?;
    let tol = cfg.params.tolerance.unwrap_or(0.05);
    let mut table = Table::new(&["lambda", "l", "w", "exact", "grid"]);
    table.push(vec![cell(lambda), cell(l), cell(w), cell(exact), cell(grid)]);
    Ok(Outcome {
        verdict: Verdict::from_bool((exact - grid).abs() <= tol),
        data: json!({"lambda": lambda, "l": l, "w": w, "exact_average": exact, "grid_average": grid, "tolerance": tol}),
        table: Some(table),
    })
}

fn scatter(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let [a, b] = cfg.interval(Command::Scatter).expect("validated");
    let grid = BandInterval::new(a, b, cfg.params.points)?.grid;
    let tol = cfg.params.tolerance.unwrap_or(1e-8);
    let mut table = Table::new(&["lambda", "alpha", "phase_1", "phase_2", "unitarity_defect", "route_difference"]);
    let mut points = Vec::with_capacity(grid.len());
    let (mut worst_u, mut worst_r) = (0.0_f64, 0.0_f64);
    for &lambda in &grid {
        let sp = s_matrix(&pot, lambda)?;
        let st = s_matrix_stationary(&pot, lambda)?;
        let u = sp.unitarity_defect();
        let r = sp.s.try_sub(&st)?.max_abs();
        worst_u = worst_u.max(u);
        worst_r = worst_r.max(r);
        table.push(vec![
            cell(lambda),
            cell(sp.alpha),
            cell(sp.phases[0]),
            cell(sp.phases[1]),
            cell(u),
            cell(r),
        ]);
        points.push(json!({"point": sp, "unitarity_defect": u, "route_difference": r}));
    }
    let lip = lipschitz_estimate(&grid, |l| smooth_kernel_z(&pot, l))?;
    Ok(Outcome {
        verdict: Verdict::from_bool(worst_u <= 1e-10 && worst_r <= tol && lip.is_finite()),
        data: json!({
            "potential": pot, "points": points, "max_unitarity_defect": worst_u,
            "max_route_difference": worst_r, "route_tolerance": tol, "lipschitz_z": lip,
        }),
        table: Some(table),
    })
}

fn flow(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let [a, b] = cfg.interval(Command::Flow).expect("validated");
    let opts = cfg.params.flow;
    let mut family = UnitaryFamily::new(a, b, opts.initial_nodes, |l| Ok(s_matrix(&pot, l)?.s))?;
    let result = family.spectral_flow(cfg.params.theta, &opts)?;
    let naive = naive_crossing_count(family.sample(), cfg.params.theta);
    let mut table = Table::new(&["lambda", "phase_1", "phase_2"]);
    for node in &family.sample().nodes {
        let mut row = vec![cell(node.lambda)];
        row.extend(node.phases.iter().map(|&p| cell(p)));
        table.push(row);
    }
    let verdict = if naive == result.flow {
        Verdict::Pass
    } else {
        Verdict::Indeterminate(format!("phase tracking counts {naive}, partition flow {}", result.flow))
    };
    Ok(Outcome {
        verdict,
        data: json!({"potential": pot, "flow": result, "naive_flow": naive}),
        table: Some(table),
    })
}

fn thm0(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let report = verify_thm0(&pot, cfg.params.lambda.expect("validated"), &l_sweep(cfg))?;
    let mut table = Table::new(&["l", "index", "value"]);
    for p in &report.points {
        for (i, v) in p.spectrum.iter().enumerate() {
            table.push(vec![cell(p.l), cell(i), cell(v)]);
        }
    }
    Ok(Outcome {
        verdict: report.verdict.clone(),
        data: serde_json::to_value(&report).expect("serializable"),
        table: Some(table),
    })
}

fn xi_rows(table: &mut Table, est: &bkflow_core::xi::XiEstimate) {
    for p in &est.sweep {
        table.push(vec![
            cell(est.lambda),
            cell(p.l),
            cell(p.delta),
            cell(p.plus),
            cell(p.minus),
            cell(p.value),
        ]);
    }
}

fn e1(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let [a, b] = cfg.interval(Command::VerifyE1).expect("validated");
    let mut table = Table::new(&["lambda", "l", "delta", "plus", "minus", "value"]);
    if a.abs() > 2.0 && b.abs() > 2.0 {
        let report = verify_gap(&pot, a, b, &l_sweep(cfg))?;
        xi_rows(&mut table, &report.xi1);
        xi_rows(&mut table, &report.xi2);
        return Ok(Outcome {
            verdict: report.verdict.clone(),
            data: json!({"mode": "gap", "report": report}),
            table: Some(table),
        });
    }
    let opts = E1Options {
        l_sweep: l_sweep(cfg),
        delta_sweep: cfg.params.delta_sweep.clone(),
        flow: cfg.params.flow,
        alpha_margin: cfg.params.alpha_margin,
    };
    let report = verify_e1(&pot, a, b, &opts)?;
    for x in [&report.xi1, &report.xi2].into_iter().flatten() {
        xi_rows(&mut table, x);
    }
    Ok(Outcome {
        verdict: report.verdict.clone(),
        data: json!({"mode": "band", "report": report}),
        table: Some(table),
    })
}

fn bk(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let l = cfg.params.l.unwrap_or(DEFAULT_BOX);
    let report = verify_bk(&pot, cfg.params.lambda.expect("validated"), l, cfg.params.w)?;
    let mut table = Table::new(&["index", "phase"]);
    for (i, p) in report.phases.iter().enumerate() {
        table.push(vec![cell(i), cell(p)]);
    }
    Ok(Outcome {
        verdict: report.verdict.clone(),
        data: serde_json::to_value(&report).expect("serializable"),
        table: Some(table),
    })
}

/// `Ξ` along a grid of energies. Consecutive admitted points (those not
/// rejected as near non-Fredholm) that are stable and in the band must
/// satisfy `ΔΞ = -flow(-1)` over the stretch between them.
fn sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pot = lattice(cfg);
    let [a, b] = cfg.interval(Command::Sweep).expect("validated");
    let n = cfg.params.points;
    let ls = l_sweep(cfg);
    let mut table = Table::new(&["lambda", "xi", "stable", "phase_1", "phase_2"]);
    let mut points = Vec::with_capacity(n);
    let mut estimates = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = if j + 1 == n { b } else { a + (b - a) * j as f64 / (n - 1) as f64 };
        let phases = if lambda.abs() < 2.0 - bkflow_core::scattering::BAND_MARGIN {
            s_matrix(&pot, lambda).map(|s| s.phases).ok()
        } else {
            None
        };
        let est = xi_truncated(&pot, lambda, &ls, cfg.params.delta_sweep.as_deref());
        let (xi, stable) = match &est {
            Ok(e) => (cell(e.value), cell(e.stable)),
            Err(_) => (String::new(), String::new()),
        };
        let mut row = vec![cell(lambda), xi, stable];
        match &phases {
            Some(p) => row.extend(p.iter().map(|&x| cell(x))),
            None => row.extend([String::new(), String::new()]),
        }
        table.push(row);
        points.push(match &est {
            Ok(e) => json!({"lambda": lambda, "estimate": e, "phases": phases}),
            Err(e) => json!({"lambda": lambda, "error": e.to_string(), "phases": phases}),
        });
        estimates.push((lambda, est.ok()));
    }

    let mut checks = Vec::new();
    let mut verdicts = Vec::new();
    let admitted: Vec<(f64, &bkflow_core::xi::XiEstimate)> =
        estimates.iter().filter_map(|(l, e)| e.as_ref().map(|e| (*l, e))).collect();
    for w in admitted.windows(2) {
        let ((l1, x1), (l2, x2)) = (&w[0], &w[1]);
        if !(x1.stable && x2.stable) {
            verdicts.push(Verdict::Indeterminate(format!("Ξ unstable on [{l1}, {l2}]")));
            continue;
        }
        let in_band = |l: f64| l.abs() < 2.0 - bkflow_core::scattering::BAND_MARGIN;
        if !(in_band(*l1) && in_band(*l2)) {
            continue;
        }
        let mut fam = UnitaryFamily::new(*l1, *l2, cfg.params.flow.initial_nodes, |l| Ok(s_matrix(&pot, l)?.s))?;
        match fam.spectral_flow(PI, &cfg.params.flow) {
            Ok(f) => {
                let ok = x2.value - x1.value == -f.flow;
                verdicts.push(Verdict::from_bool(ok));
                checks.push(json!({"lo": l1, "hi": l2, "delta_xi": x2.value - x1.value, "flow": f.flow}));
            }
            Err(e) => verdicts.push(Verdict::Indeterminate(format!("flow on [{l1}, {l2}]: {e}"))),
        }
    }
    let verdict = if admitted.is_empty() {
        Verdict::Indeterminate("no grid point admitted an index estimate".into())
    } else {
        Verdict::all(&verdicts)
    };
    Ok(Outcome {
        verdict,
        data: json!({"potential": pot, "points": points, "steps": checks}),
        table: Some(table),
    })
}
