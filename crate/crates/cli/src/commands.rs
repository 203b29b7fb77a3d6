use crate::config::{Panel, RunConfig};
use crate::output::{num, Csv, Failure, Run};
use rayon::prelude::*;
use serde_json::json;
use spincool::dynamics::BlockKind;
use spincool::ensemble::{ensemble_echo_m, ensemble_initial_m, ensemble_two_pulse_m};
use spincool::optimize::{greedy_schedule, optimize_block, Objective, OptimizationProblem, OptimizationResult};
use spincool::reproduce::{curve_peak, fig1_ohmic_curve, fig1_one_over_f_curve, table1_cell, Table1Cell};
use spincool::{evolve_sequence, Kernel, ModelConfig, Pulse, PulseSequence, Step};

pub fn kernels(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let k = cfg.bath.kernels()?;
    let grid = cfg.kernels.grid.points().map_err(Failure::Config)?;
    let rows = run.phase("evaluate", || {
        grid.par_iter()
            .map(|&t| {
                let xi = k.xi(t)?;
                Ok([t, k.big_f(t)?, xi, (-xi).exp()])
            })
            .collect::<spincool::Result<Vec<_>>>()
    })?;
    let mut csv = Csv::new(&["t", "F", "xi", "exp_minus_xi"]);
    for r in &rows {
        csv.row(&r.map(num));
    }
    run.write("kernels.csv", csv.text())?;
    run.note("points", json!(rows.len()));
    println!("kernels: {} points -> kernels.csv", rows.len());
    Ok(())
}

fn curve_csv(xs: &[f64], ps: &[f64]) -> String {
    let mut csv = Csv::new(&["tau_dimensionless", "P"]);
    for (x, p) in xs.iter().zip(ps) {
        csv.row(&[num(*x), num(*p)]);
    }
    csv.text().to_string()
}

pub fn fig1(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let f = &cfg.fig1;
    let mut peaks = Vec::new();
    if f.panels.contains(&Panel::Ohmic) {
        let taus = f.ohmic_grid.points().map_err(Failure::Config)?;
        let curves = run.phase("ohmic", || {
            f.ohmic_curves
                .par_iter()
                .map(|&[g, th]| {
                    let ps = fig1_ohmic_curve(g, th, &taus)?;
                    let peak = curve_peak(|t| Ok(fig1_ohmic_curve(g, th, &[t])?[0]), 1e-4, 1e3, 400)?;
                    Ok((g, th, ps, peak))
                })
                .collect::<spincool::Result<Vec<_>>>()
        })?;
        for (g, th, ps, (x, p)) in curves {
            let name = format!("fig1_ohmic_gamma{g}_theta{th}.csv");
            run.write(&name, &curve_csv(&taus, &ps))?;
            println!("fig1 ohmic γ={g} Θ={th}: peak P={p:.6} at τΓ={x:.6} -> {name}");
            peaks.push(json!({"panel": "ohmic", "gamma": g, "theta": th, "peak": p, "at": x}));
        }
    }
    if f.panels.contains(&Panel::OneOverF) {
        let ys = f.one_over_f_grid.points().map_err(Failure::Config)?;
        let backend = f.one_over_f_backend.into();
        let curves = run.phase("one-over-f", || {
            f.ratios
                .par_iter()
                .map(|&r| {
                    let ps = fig1_one_over_f_curve(f.gamma_f, r, &ys, backend)?;
                    let peak = curve_peak(|y| Ok(fig1_one_over_f_curve(f.gamma_f, r, &[y], backend)?[0]), 1e-3, 10.0, 400)?;
                    Ok((r, ps, peak))
                })
                .collect::<spincool::Result<Vec<_>>>()
        })?;
        for (r, ps, (y, p)) in curves {
            let name = format!("fig1_one_over_f_ratio{r}.csv");
            run.write(&name, &curve_csv(&ys, &ps))?;
            println!("fig1 1/f Θ_f/γ_f={r}: peak P={p:.6} at y={y:.6} -> {name}");
            peaks.push(json!({"panel": "one-over-f", "ratio": r, "gamma_f": f.gamma_f, "peak": p, "at": y}));
        }
    }
    run.note("peaks", json!(peaks));
    Ok(())
}

pub fn table1(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let (rows, cols) = cfg.table1.resolve().map_err(Failure::Config)?;
    let jobs: Vec<_> = rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect();
    let cells = run.phase("cells", || {
        jobs.par_iter().map(|&(r, c)| table1_cell(r, c, cfg.seed)).collect::<spincool::Result<Vec<Table1Cell>>>()
    })?;
    let mut csv = Csv::new(&["row", "gamma", "theta", "value", "published", "deviation", "tolerance", "within_tolerance", "converged"]);
    let mut outside = Vec::new();
    for c in &cells {
        csv.row(&[
            c.row.label().to_string(),
            num(c.gamma),
            num(c.theta),
            num(c.value),
            num(c.published),
            num(c.deviation()),
            num(c.row.tolerance()),
            c.within_tolerance().to_string(),
            c.converged.to_string(),
        ]);
        if !c.converged {
            eprintln!("warning: cell {} (γ={}, Θ={}) did not converge", c.row.label(), c.gamma, c.theta);
        }
        if !c.within_tolerance() {
            outside.push(json!({"row": c.row.label(), "gamma": c.gamma, "theta": c.theta, "value": c.value, "published": c.published}));
        }
        println!(
            "{:>10}  γ={:<4} Θ={:<4} {:.4}  (reference {:.4}, deviation {:.1e})",
            c.row.label(),
            c.gamma,
            c.theta,
            c.value,
            c.published,
            c.deviation()
        );
    }
    run.write("table1.csv", csv.text())?;
    run.note("cells", json!(cells.len()));
    run.note("outside_tolerance", json!(outside));
    Ok(())
}

fn pulse_json(p: &Pulse) -> serde_json::Value {
    json!({"theta": p.theta(), "phi": p.phi(), "psi": p.psi()})
}

fn result_json(r: &OptimizationResult) -> serde_json::Value {
    json!({
        "objective": r.objective.name(),
        "initial_sz": r.initial_sz,
        "pulses": r.pulses.iter().map(pulse_json).collect::<Vec<_>>(),
        "delays": r.delays,
        "sz": r.sz,
        "best_value": r.best_value,
        "n_evals": r.n_evals,
        "converged": r.converged,
        "sequence": r.sequence().to_string(),
    })
}

pub fn optimize(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let o = &cfg.optimize;
    let kernels = cfg.bath.kernels()?;
    let objective = o.objective().map_err(Failure::Config)?;
    let kind_objective = match objective {
        Some(obj) => obj,
        None => match o.block_kind.as_str() {
            "two-pulse" => Objective::TwoPulse,
            "echo" => Objective::Echo,
            other => return Err(Failure::Config(format!("optimize.block_kind: expected two-pulse or echo, got `{other}`"))),
        },
    };
    let mut problem = OptimizationProblem::for_kernels(kind_objective, &kernels).with_seed(cfg.seed);
    if let Some(t) = o.tau_max {
        problem.tau_max = t;
    }
    problem.starts = o.starts;
    if o.max_evals > 0 {
        problem.max_evals = o.max_evals;
    }
    problem.value_tol = o.value_tol;
    problem.param_tol = o.param_tol;
    problem.grid_tau = o.grid_tau;
    problem.grid_alpha = o.grid_alpha;
    problem.initial_sz = o.initial_sz;
    if let Some(e) = &cfg.ensemble {
        if kind_objective != Objective::Echo {
            return Err(Failure::Config("an [ensemble] block is only supported with echo optimization".into()));
        }
        let spin_t = e.spin_temperature.unwrap_or(cfg.bath.temperature);
        problem.initial_sz = Some(ensemble_initial_m(&e.spec()?, spin_t)?);
    }
    let model = ModelConfig::new(kernels, cfg.omega)?;

    if objective.is_some() {
        let r = run.phase("optimize", || optimize_block(&problem, &model))?;
        let mut csv = Csv::new(&["stage", "best_value"]);
        for (i, v) in r.trace.iter().enumerate() {
            csv.row(&[i.to_string(), num(*v)]);
        }
        run.write("optimize_trace.csv", csv.text())?;
        let text = serde_json::to_string_pretty(&result_json(&r)).expect("json") + "\n";
        run.write("optimize_result.json", &text)?;
        if !r.converged {
            eprintln!("warning: evaluation budget exhausted; reporting the best point found");
        }
        println!("{}: |<sz>_f| = {:.10} after {} evaluations; {}", r.objective.name(), r.best_value, r.n_evals, r.sequence());
        run.note("best_value", json!(r.best_value));
        run.note("converged", json!(r.converged));
    } else {
        if o.blocks == 0 {
            return Err(Failure::Config("optimize.blocks must be >= 1".into()));
        }
        let kind = if kind_objective == Objective::Echo { BlockKind::Echo } else { BlockKind::TwoPulse };
        let g = run.phase("greedy", || greedy_schedule(&model, o.blocks, kind, &problem))?;
        let mut csv = Csv::new(&["block", "sz", "P", "theta1", "phi1", "psi1", "theta2", "phi2", "psi2", "tau"]);
        csv.row(&["0".to_string(), num(g.trace[0]), num(g.trace[0].abs()), "".into(), "".into(), "".into(), "".into(), "".into(), "".into(), "".into()]);
        for (k, b) in g.blocks.iter().enumerate() {
            let p = g.trace[k + 1];
            csv.row(&[
                (k + 1).to_string(),
                num(p),
                num(p.abs()),
                num(b.p1.theta()),
                num(b.p1.phi()),
                num(b.p1.psi()),
                num(b.p2.theta()),
                num(b.p2.phi()),
                num(b.p2.psi()),
                num(b.tau),
            ]);
        }
        run.write("greedy_trace.csv", csv.text())?;
        if !g.converged {
            eprintln!("warning: at least one block exhausted its evaluation budget");
        }
        println!("{} x {}: final P = {:.10}", o.blocks, kind.name(), g.final_polarization());
        run.note("final_polarization", json!(g.final_polarization()));
        run.note("converged", json!(g.converged));
    }
    Ok(())
}

pub fn evolve(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let seq: PulseSequence = cfg.evolve.sequence.parse()?;
    let kernels = cfg.bath.kernels()?;
    match (&cfg.ensemble, &cfg.evolve.ensemble_protocol) {
        (None, Some(_)) => Err(Failure::Config("evolve.ensemble_protocol needs an [ensemble] block".into())),
        (Some(_), None) => Err(Failure::Config("an [ensemble] block needs evolve.ensemble_protocol".into())),
        (None, None) => {
            let model = ModelConfig::new(kernels, cfg.omega)?;
            let s = run.phase("evolve", || evolve_sequence(&model, &seq))?;
            let mut csv = Csv::new(&["sz", "splus_re", "splus_im", "P", "bloch_norm"]);
            csv.row(&[num(s.sz), num(s.splus.re), num(s.splus.im), num(s.polarization()), num(s.bloch_norm())]);
            run.write("evolve.csv", csv.text())?;
            println!("{seq}: <sz> = {:.12}, <s+> = {:.12}{:+.12}i", s.sz, s.splus.re, s.splus.im);
            run.note("sz", json!(s.sz));
            Ok(())
        }
        (Some(e), Some(protocol)) => {
            let pulses: Vec<(f64, Pulse)> = seq
                .steps
                .iter()
                .map(|s| match s {
                    Step::Pulse { delay, pulse } => Ok((*delay, *pulse)),
                    Step::Reset => Err(Failure::Config("ensemble protocols take no resets".into())),
                })
                .collect::<Result<_, _>>()?;
            if pulses.len() != 2 || pulses[0].0 != 0.0 {
                return Err(Failure::Config(
                    "ensemble protocols take exactly two pulses, the first directly after the preparation".into(),
                ));
            }
            let ((_, p1), (tau, p2)) = (pulses[0], pulses[1]);
            let spec = e.spec()?;
            let spin_t = e.spin_temperature.unwrap_or(cfg.bath.temperature);
            let m_i = ensemble_initial_m(&spec, spin_t)?;
            let m_f = run.phase("evolve", || match protocol.as_str() {
                "two-pulse" => ensemble_two_pulse_m(&kernels, &spec, seq.prep, tau, &p1, &p2, spin_t),
                "echo" => ensemble_echo_m(&kernels, &spec, seq.prep, tau / 2.0, &p1, &p2, spin_t),
                other => Err(spincool::Error::InvalidParameter {
                    name: "evolve.ensemble_protocol",
                    reason: format!("expected two-pulse or echo, got `{other}`"),
                }),
            })?;
            let mut csv = Csv::new(&["m_i", "m_f", "P"]);
            csv.row(&[num(m_i), num(m_f), num(m_f.abs())]);
            run.write("evolve.csv", csv.text())?;
            println!("{protocol} ensemble (Ω₀={}, d={}): m_i = {m_i:.12}, m_f = {m_f:.12}", e.omega0, e.dispersion);
            run.note("m_f", json!(m_f));
            Ok(())
        }
    }
}
