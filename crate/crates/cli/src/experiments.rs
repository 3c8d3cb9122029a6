use std::error::Error as StdError;
use std::path::Path;

use gq_core::free_field::{covariance_check, mass_check, wick_four_point_check, FieldSampler};
use gq_core::gibbs::{ClassicalModel, CutoffSpec, FieldFunctional};
use gq_core::hartree::{approximation_study, epsilon_flow_study, gibbs_invariance_test, rn_plus_proxy, FlowConfig, HartreeFlow, Integrator};
use gq_core::interaction::InteractionSpec;
use gq_core::observable::Observable;
use gq_core::quantum::{free_gamma1_gap, QuantumConfig, QuantumSystem};
use gq_core::spectral::{modes, ModeGrid};
use gq_core::stats::McEstimate;
use gq_core::wick::{pairing_count, WickEngine, DEFAULT_PAIRING_BUDGET};
use nalgebra::DMatrix;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{num, Outcome};

pub type BoxError = Box<dyn StdError + Send + Sync>;

/// Width of the tent potential used for the `R_N^+` proxy in `epsilon-study`.
pub const ROUGH_TENT_WIDTH: f64 = 0.3;
const N_SE: f64 = 3.0;

pub fn interaction(cfg: &RunConfig, base: &Path) -> Result<InteractionSpec<f64>, BoxError> {
    let w = &cfg.w;
    let preset = match w.kind.as_str() {
        "preset" => w.preset.clone().ok_or("w.type = \"preset\" needs w.preset")?,
        other => other.to_string(),
    };
    Ok(match preset.as_str() {
        "delta" => InteractionSpec::delta(w.c),
        "zero" => InteractionSpec::zero(),
        "gaussian" => InteractionSpec::gaussian(w.c, w.width.unwrap_or(0.1))?,
        "tent" => InteractionSpec::tent(w.c, w.width.unwrap_or(ROUGH_TENT_WIDTH))?,
        "mollified" => InteractionSpec::mollified(w.c, w.eps.unwrap_or(0.1))?,
        "table" => {
            let file = w.file.as_ref().ok_or("w.type = \"table\" needs w.file")?;
            let path = base.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            InteractionSpec::from_table_text(&text)?
        }
        other => return Err(format!("unknown potential {other:?} (delta, zero, gaussian, tent, mollified, table)").into()),
    })
}

pub fn cutoff(cfg: &RunConfig) -> Result<CutoffSpec<f64>, BoxError> {
    Ok(match cfg.f_kind.as_str() {
        "sharp" => CutoffSpec::sharp(cfg.k)?,
        "smooth" => CutoffSpec::smooth(cfg.k)?,
        "none" => CutoffSpec::none(),
        other => return Err(format!("unknown f_kind {other:?} (sharp, smooth, none)").into()),
    })
}

fn flow_config(cfg: &RunConfig, n: usize) -> Result<FlowConfig<f64>, BoxError> {
    let integrator: Integrator = cfg.integrator.parse()?;
    let fc = FlowConfig { n, dt: cfg.dt, t_final: cfg.t, integrator, kappa: cfg.kappa };
    fc.validate()?;
    Ok(fc)
}

fn first_tau(cfg: &RunConfig) -> Result<f64, BoxError> {
    cfg.tau.first().copied().ok_or_else(|| "tau list is empty".into())
}

fn quantum_system(cfg: &RunConfig, base: &Path) -> Result<QuantumSystem<f64>, BoxError> {
    let qc = QuantumConfig::new(cfg.modes_m, cfg.n_max, first_tau(cfg)?, cfg.kappa, interaction(cfg, base)?, cutoff(cfg)?);
    Ok(QuantumSystem::new(qc)?)
}

fn rel_drift(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        (x - x0).abs()
    } else {
        ((x - x0) / x0).abs()
    }
}

/// Validates everything that can fail before compute starts: potentials, cutoffs, list
/// contents and the combinatorial budgets.
pub fn preflight(cfg: &RunConfig, base: &Path) -> Result<(), BoxError> {
    interaction(cfg, base)?;
    cutoff(cfg)?;
    cfg.integrator.parse::<Integrator>()?;
    if cfg.tau.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err("every tau must be positive and finite".into());
    }
    match cfg.experiment.as_str() {
        "wick-convergence" => {
            for m in 0..=cfg.m_max {
                let count = pairing_count(m, cfg.p);
                if count > DEFAULT_PAIRING_BUDGET {
                    return Err(format!(
                        "pairing count (3m+p)! = {count} for m = {m}, p = {} exceeds the budget {DEFAULT_PAIRING_BUDGET}",
                        cfg.p
                    )
                    .into());
                }
            }
        }
        "quantum-oracle" | "duhamel-series" | "time-correlations" => {
            quantum_system(cfg, base)?;
        }
        _ => {}
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    match cfg.experiment.as_str() {
        "free-field-check" => free_field_check(cfg),
        "sample-gibbs" => sample_gibbs(cfg, base),
        "correlations" => correlations(cfg, base),
        "evolve" => evolve(cfg, base),
        "invariance-test" => invariance(cfg, base),
        "approx-study" => approx(cfg, base),
        "epsilon-study" => epsilon(cfg),
        "quantum-oracle" => quantum_oracle(cfg, base),
        "duhamel-series" => duhamel(cfg, base),
        "wick-convergence" => wick(cfg, base),
        "time-correlations" => time_correlations(cfg, base),
        other => Err(format!("unknown experiment {other:?}").into()),
    }
}

fn free_field_check(cfg: &RunConfig) -> Result<Outcome, BoxError> {
    let grid = ModeGrid::new(cfg.n_modes, cfg.kappa)?;
    let samples = FieldSampler::new(grid, cfg.seed).samples(0, cfg.samples);
    let cov = covariance_check(&samples, cfg.kappa, cfg.seed)?;
    let pairs = [(0, 0), (1, 1), (0, 1), (1, -1), (2, 3)];
    let four = wick_four_point_check(&samples, &pairs, cfg.kappa, cfg.seed, 1000)?;
    let mass = mass_check(&samples, cfg.kappa, cfg.seed)?;
    let mut out = Outcome::new(&["check", "mean", "std_error", "expected", "z_score"]);
    for c in cov.iter().chain(&four).chain(std::iter::once(&mass)) {
        out.row(vec![c.name.clone(), num(c.estimate.mean), num(c.estimate.std_error), num(c.expected), num(c.z_score)]);
    }
    let second: Vec<_> = cov.iter().filter(|c| c.name.starts_with("E|")).collect();
    let good = second.iter().filter(|c| c.passes(N_SE)).count();
    let frac = good as f64 / second.len() as f64;
    out.metric("modes_within_3se", frac);
    out.check("covariance E|a_k|^2 = 1/lambda_k within 3 SE on >= 95% of modes", frac >= 0.95, format!("{good} of {}", second.len()));
    let worst = four.iter().map(|c| c.z_score).fold(0.0, f64::max);
    out.metric("four_point_max_z", worst);
    out.check("Gaussian four-point identities within 3 SE", worst <= N_SE, format!("max z = {worst:.3}"));
    out.metric("mass_z", mass.z_score);
    Ok(out)
}

fn sample_gibbs(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let grid = ModeGrid::new(cfg.n_modes, cfg.kappa)?;
    let model = ClassicalModel::new(grid, interaction(cfg, base)?, cutoff(cfg)?, cfg.seed);
    let rows = model.map_samples(cfg.samples, |s| Ok((s.index, s.mass, s.interaction, s.weight)))?;
    let mut out = Outcome::new(&["index", "mass", "W", "weight"]);
    for &(i, m, w, wt) in &rows {
        out.row(vec![i.to_string(), num(m), num(w), num(wt)]);
    }
    let weights: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let z = McEstimate::from_samples(&weights, cfg.seed)?;
    let half = McEstimate::from_samples(&weights[..weights.len() / 2], cfg.seed)?;
    let masses: Vec<f64> = rows.iter().map(|r| r.1 * r.3).collect();
    let rho_mass = McEstimate::ratio(&masses, &weights, cfg.seed)?;
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 };
    out.metric("z_mean", z.mean);
    out.metric("z_std_error", z.std_error);
    out.metric("rho_mass", rho_mass.mean);
    out.metric("rho_mass_std_error", rho_mass.std_error);
    out.metric("effective_sample_size", ess);
    out.check("partition estimate finite and positive", z.mean.is_finite() && z.mean > 0.0, format!("z = {}", z.mean));
    let se = (z.std_error.powi(2) + half.std_error.powi(2)).sqrt();
    let gap = (z.mean - half.mean).abs();
    out.check("partition estimate stable under doubling the sample count", gap <= N_SE * se, format!("|z_n - z_n/2| = {gap:e}, 3 SE = {:e}", N_SE * se));
    Ok(out)
}

fn correlations(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let grid = ModeGrid::new(cfg.n_modes, cfg.kappa)?;
    let model = ClassicalModel::new(grid, interaction(cfg, base)?, cutoff(cfg)?, cfg.seed);
    let est = model.mc_correlation_gamma(cfg.p, cfg.samples)?;
    let mut out = Outcome::new(&["row", "col", "re", "im", "std_error"]);
    let label = |i: usize| gq_core::observable::tuple_of(i, cfg.p, cfg.n_modes).iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
    let dim = est.mean.nrows();
    for r in 0..dim {
        for c in 0..dim {
            let v = est.mean[(r, c)];
            out.row(vec![label(r), label(c), num(v.re), num(v.im), num(est.std_error[(r, c)])]);
        }
    }
    let scale = est.mean.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let herm = (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| (est.mean[(r, c)] - est.mean[(c, r)].conj()).norm()).fold(0.0, f64::max);
    let embedded = DMatrix::from_fn(2 * dim, 2 * dim, |r, c| {
        let z = (est.mean[(r % dim, c % dim)] + est.mean[(c % dim, r % dim)].conj()) * 0.5;
        match (r < dim, c < dim) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let min_eig = nalgebra::SymmetricEigen::new(embedded).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    out.metric("trace_re", est.trace().re);
    out.metric("min_eigenvalue", min_eig);
    out.check("gamma_p Hermitian", herm <= 1e-12 * scale, format!("defect {herm:e}"));
    out.check("gamma_p positive semidefinite", min_eig >= -1e-12 * scale, format!("min eigenvalue {min_eig:e}"));
    Ok(out)
}

fn evolve(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let fc = flow_config(cfg, cfg.n)?;
    let flow = HartreeFlow::new(fc, interaction(cfg, base)?)?;
    let grid = ModeGrid::new(cfg.n, cfg.kappa)?;
    let u0 = FieldSampler::new(grid, cfg.seed).sample(0);
    let every = ((0.01 / cfg.dt).round() as usize).max(1);
    let traj = flow.trajectory(&u0, every)?;
    let (m0, h0) = (traj[0].mass, traj[0].hamiltonian);
    let mut out = Outcome::new(&["t", "mass", "hamiltonian", "rel_mass_drift", "rel_h_drift"]);
    let (mut dm, mut dh) = (0.0f64, 0.0f64);
    for s in &traj {
        let (a, b) = (rel_drift(s.mass, m0), rel_drift(s.hamiltonian, h0));
        dm = dm.max(a);
        dh = dh.max(b);
        out.row(vec![num(s.t), num(s.mass), num(s.hamiltonian), num(a), num(b)]);
    }
    out.metric("max_rel_mass_drift", dm);
    out.metric("max_rel_h_drift", dh);
    if fc.integrator == Integrator::StrangSplit {
        out.check("mass conserved to 1e-10 relative", dm <= 1e-10, format!("{dm:e}"));
    }
    out.check("H_N conserved to 1e-6 relative", dh <= 1e-6, format!("{dh:e}"));
    Ok(out)
}

fn invariance_observables(band: usize) -> Result<Vec<FieldFunctional<f64>>, BoxError> {
    Ok(vec![FieldFunctional::Mass, FieldFunctional::ReMode(1), FieldFunctional::Theta(Observable::mode_occupation(1, band)?)])
}

fn invariance(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let flow = HartreeFlow::new(flow_config(cfg, cfg.n)?, interaction(cfg, base)?)?;
    let obs = invariance_observables(cfg.n)?;
    let rep = gibbs_invariance_test(&flow, cutoff(cfg)?, cfg.samples, cfg.seed, &obs)?;
    let mut out = Outcome::new(&["observable", "mean_start", "se_start", "mean_end", "se_end", "z_score"]);
    for r in &rep.rows {
        out.row(vec![r.name.clone(), num(r.start.mean), num(r.start.std_error), num(r.end.mean), num(r.end.std_error), num(r.z_score)]);
        out.check(format!("{} invariant within 3 combined SE", r.name), r.z_score <= N_SE, format!("z = {:.3}", r.z_score));
    }
    Ok(out)
}

fn approx(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let fc = flow_config(cfg, cfg.n_ref)?;
    let study = approximation_study(&interaction(cfg, base)?, fc, cfg.s, cfg.s1, cfg.amplitude, &cfg.n_list, cfg.n_ref)?;
    let mut out = Outcome::new(&["N", "sup_error"]);
    for r in &study.rows {
        out.row(vec![r.n.to_string(), num(r.error)]);
    }
    out.metric("fitted_exponent", study.fitted_exponent);
    out.metric("tail_exponent", study.tail_exponent);
    let mut sorted = study.rows.clone();
    sorted.sort_by_key(|r| r.n);
    let monotone = sorted.windows(2).all(|w| w[1].error <= w[0].error);
    out.check("error nonincreasing in N", monotone, format!("{:?}", sorted.iter().map(|r| r.error).collect::<Vec<_>>()));
    Ok(out)
}

fn epsilon(cfg: &RunConfig) -> Result<Outcome, BoxError> {
    let fc = flow_config(cfg, cfg.n)?;
    let grid = ModeGrid::new(cfg.n, cfg.kappa)?;
    let u0 = FieldSampler::new(grid, cfg.seed).sample(0);
    let mut eps = cfg.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let rows = epsilon_flow_study(&u0, cfg.w.c, &eps, cfg.s, fc)?;
    let mut out = Outcome::new(&["eps", "sup_error", "w_hat_0", "w_hat_1", "w_hat_2", "w_hat_3"]);
    for r in &rows {
        out.row(vec![num(r.eps), num(r.sup_error), num(r.w_hat[0]), num(r.w_hat[1]), num(r.w_hat[2]), num(r.w_hat[3])]);
    }
    let c = cfg.w.c;
    let pointwise = (0..4).all(|k| rows.windows(2).all(|w| (w[1].w_hat[k] - c).abs() <= (w[0].w_hat[k] - c).abs()));
    out.check("w_hat^eps(k) -> c pointwise as eps decreases", pointwise, "k = 0..3");
    let monotone = rows.windows(2).all(|w| w[1].sup_error <= w[0].sup_error);
    out.check(
        "sup_t ||u^eps - u||_{H^s} nonincreasing as eps decreases",
        monotone,
        format!("{:?}", rows.iter().map(|r| r.sup_error).collect::<Vec<_>>()),
    );
    let rough = InteractionSpec::tent(c, ROUGH_TENT_WIDTH)?;
    let mut ns = cfg.n_list.clone();
    ns.sort_unstable();
    let proxies: Vec<f64> = ns.iter().map(|&n| rn_plus_proxy(&rough, n, 64 * ns.last().copied().unwrap_or(1))).collect();
    out.metric("rn_plus_n", json!(ns));
    out.metric("rn_plus_proxy", json!(proxies));
    let decreasing = proxies.windows(2).all(|p| p[1] < p[0]);
    out.check("||R_N^+ w|| proxy decreasing in N", decreasing, format!("{proxies:?}"));
    Ok(out)
}

fn quantum_oracle(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let sys = quantum_system(cfg, base)?;
    let state = sys.gibbs_state()?;
    let sanity = sys.sanity(&state)?;
    let mut out = Outcome::new(&["n", "dimension", "probability"]);
    for (n, p) in state.sector_probabilities().iter().enumerate() {
        out.row(vec![n.to_string(), sys.basis().sector(n).dim().to_string(), num(*p)]);
    }
    let number = state.number_expectation();
    let trace = sys.gamma1(&state).trace();
    out.metric("log_partition", state.log_partition());
    out.metric("rho_number", number);
    out.metric("gamma1_trace", trace.re);
    out.metric("ccr_defect", sanity.ccr_defect);
    out.metric("number_commutator", sanity.number_commutator);
    out.metric("gamma1_min_eigenvalue", sanity.gamma1_min_eigenvalue);
    out.metric("z0_trace", sanity.z0_trace);
    out.check("CCR away from the truncation boundary to 1e-12", sanity.ccr_defect <= 1e-12, format!("{:e}", sanity.ccr_defect));
    out.check("[H_tau, N_tau] = 0 to 1e-10", sanity.number_commutator <= 1e-10, format!("{:e}", sanity.number_commutator));
    out.check("gamma_1 Hermitian", sanity.gamma1_hermiticity <= 1e-12, format!("{:e}", sanity.gamma1_hermiticity));
    out.check("gamma_1 positive semidefinite", sanity.gamma1_min_eigenvalue >= -1e-12, format!("{:e}", sanity.gamma1_min_eigenvalue));
    out.check(
        "Z_{tau,0} trace equals occupation-sum enumeration exactly",
        sanity.z0_trace == sanity.z0_enumerated,
        format!("{:e} vs {:e}", sanity.z0_trace, sanity.z0_enumerated),
    );
    let rel = (trace.re - number).abs() / number.abs().max(f64::MIN_POSITIVE);
    out.check("Tr gamma_1 = rho(N_tau)", rel <= 1e-10, format!("relative gap {rel:e}"));
    Ok(out)
}

fn duhamel(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let sys = quantum_system(cfg, base)?;
    let obs = Observable::identity(cfg.p, cfg.modes_m)?;
    let rep = sys.series_vs_trace(cfg.z, &obs, cfg.terms)?;
    let mut out = Outcome::new(&["terms", "a_re", "a_im", "partial_re", "partial_im", "gap", "bound"]);
    for (j, a) in rep.coefficients.iter().enumerate() {
        let s = rep.partial_sums[j];
        out.row(vec![(j + 1).to_string(), num(a.value.re), num(a.value.im), num(s.re), num(s.im), num(rep.gaps[j]), num(rep.bounds[j])]);
    }
    out.metric("direct_re", rep.direct.re);
    out.metric("direct_im", rep.direct.im);
    out.metric("fallbacks", rep.coefficients.iter().map(|a| a.fallbacks).sum::<usize>());
    let terms = cfg.terms.min(3);
    out.check(
        format!("|F(z) - sum_(m<{terms}) a_m z^m| within the remainder bound"),
        rep.within_bound(terms),
        format!("gap {:e}, bound {:e}", rep.gaps[terms - 1], rep.bounds[terms - 1]),
    );
    let floor = 1e-13 * rep.direct.norm();
    out.check("gap shrinks monotonically with the number of terms", rep.gaps_monotone(floor), format!("{:?}", rep.gaps));
    Ok(out)
}

fn wick(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let engine = WickEngine::new(cfg.modes_m, cfg.kappa, interaction(cfg, base)?)?;
    let obs = if cfg.p == 0 { None } else { Some(Observable::identity(cfg.p, cfg.modes_m)?) };
    let ms: Vec<usize> = (0..=cfg.m_max).collect();
    let study = engine.tau_convergence_study(&ms, &cfg.tau, obs.as_ref())?;
    let mut out = Outcome::new(&["quantity", "m", "tau", "value_tau", "value_limit", "abs_diff", "flagged"]);
    for r in &study.rows {
        out.row(vec!["b".into(), r.m.to_string(), num(r.tau), num(r.b_tau), num(r.b_classical), num(r.abs_diff), r.flagged.to_string()]);
    }
    let band: Vec<i64> = modes(cfg.modes_m).collect();
    let mut gaps = Vec::new();
    for &tau in &cfg.tau {
        let n_max = (200.0 * tau).ceil().max(200.0) as usize;
        let gap = free_gamma1_gap(&band, tau, cfg.kappa, n_max);
        gaps.push(gap);
        out.row(vec!["gamma1_free".into(), String::new(), num(tau), String::new(), String::new(), num(gap), "false".into()]);
    }
    for &m in &ms {
        let diffs: Vec<f64> = study.rows.iter().filter(|r| r.m == m).map(|r| r.abs_diff).collect();
        out.check(format!("|b_tau,{m} - b_{m}| strictly decreasing in tau"), study.strictly_decreasing(m), format!("{diffs:?}"));
    }
    let flagged = study.rows.iter().filter(|r| r.flagged).count();
    out.check("simplex quadrature converged on every row", flagged == 0, format!("{flagged} flagged"));
    out.check("||gamma_tau,1 - gamma_1||_F (free) strictly decreasing in tau", gaps.windows(2).all(|g| g[1] < g[0]), format!("{gaps:?}"));
    out.metric("w_sup_norm", engine.w_sup_norm());
    Ok(out)
}

fn time_correlations(cfg: &RunConfig, base: &Path) -> Result<Outcome, BoxError> {
    let w = interaction(cfg, base)?;
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    if times.iter().any(|&t| !(0.0..=cfg.t).contains(&t)) {
        return Err(format!("times must lie in [0, T] with T = {}", cfg.t).into());
    }
    let flow = HartreeFlow::new(flow_config(cfg, cfg.n)?, w.clone())?;
    let grid = ModeGrid::new(cfg.n, cfg.kappa)?;
    let model = ClassicalModel::new(grid, w, cutoff(cfg)?, cfg.seed);
    let one = FieldFunctional::Theta(Observable::identity(1, cfg.n)?);
    let occ = FieldFunctional::Theta(Observable::mode_occupation(1, cfg.n)?);
    let per_sample = model.map_samples(cfg.samples, |s| {
        let x0 = occ.eval(&s.field);
        let mut state = s.field.clone();
        let mut t_prev = 0.0;
        let mut vals = Vec::with_capacity(times.len());
        for &t in &times {
            if s.weight != 0.0 && t > t_prev {
                state = flow.evolve(&state, t - t_prev)?;
            }
            t_prev = t;
            vals.push([one.eval(&state), occ.eval(&state), x0 * occ.eval(&state)].map(|v| v * s.weight));
        }
        Ok((vals, s.weight))
    })?;
    let weights: Vec<f64> = per_sample.iter().map(|p| p.1).collect();
    let names = ["Theta(1_1)", "|a(1)|^2", "|a(1)|^2(0) |a(1)|^2(t)"];
    let mut out = Outcome::new(&["side", "observable", "t", "value", "std_error"]);
    let mut classical = vec![Vec::new(); 3];
    for (j, &t) in times.iter().enumerate() {
        for (q, name) in names.iter().enumerate() {
            let num_q: Vec<f64> = per_sample.iter().map(|p| p.0[j][q]).collect();
            let est = McEstimate::ratio(&num_q, &weights, cfg.seed)?;
            out.row(vec!["classical".into(), name.to_string(), num(t), num(est.mean), num(est.std_error)]);
            classical[q].push(est);
        }
    }
    for q in 0..2 {
        let (a, b) = (classical[q][0], *classical[q].last().expect("nonempty times"));
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        let gap = (a.mean - b.mean).abs();
        let pass = gap <= N_SE * se || gap <= 1e-12 * a.mean.abs();
        out.check(format!("classical {} at t = 0 and t = T within 3 SE", names[q]), pass, format!("gap {gap:e}, SE {se:e}"));
    }
    let sys = quantum_system(cfg, base)?;
    let state = sys.gibbs_state()?;
    let xi = Observable::mode_occupation(1, cfg.modes_m)?;
    let static_value = sys.time_correlation(&state, &[(xi.clone(), 0.0)])?;
    let mut worst = 0.0f64;
    for &t in &times {
        let v1 = sys.time_correlation(&state, &[(xi.clone(), t)])?;
        let v2 = sys.time_correlation(&state, &[(xi.clone(), 0.0), (xi.clone(), t)])?;
        worst = worst.max((v1 - static_value).norm() / static_value.norm().max(f64::MIN_POSITIVE));
        out.row(vec!["quantum".into(), names[1].into(), num(t), num(v1.re), num(0.0)]);
        out.row(vec!["quantum".into(), names[2].into(), num(t), num(v2.re), num(0.0)]);
    }
    out.check("quantum one-point function invariant under Psi^t to 1e-10", worst <= 1e-10, format!("{worst:e}"));
    Ok(out)
}
