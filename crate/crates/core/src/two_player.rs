//! Policy iteration for two-player mean-payoff games.
//!
//! MIN improves its strategy against an invariant half-line of the one-player
//! game obtained by fixing it; each such game is solved by [`multichain_pi`].
//! When the slope does not change the iteration is degenerate, and the bias is
//! replaced by the spectral projection of the previous bias, which prevents
//! cycling.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use log::{debug, warn};

use crate::chain::LinearOptions;
use crate::critical::{critical_graph, spectral_projection, tangent_game, tilde_family};
use crate::error::SolveError;
use crate::game::{restrict_min, Game, HalfLine, MaxReply, MaxStrategy, MinStrategy, OnePlayerGame};
use crate::one_player::{multichain_pi, InnerOptions, MultichainSolution};
use crate::shapley::{min_action_set, residual_with, sup_dist, tangent_action_value, Tolerances};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: Tolerances,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Skip the spectral projection at degenerate iterations.
    pub naive: bool,
    /// Cold inner starts and no single-component shortcut, so that biases
    /// follow the textbook iteration exactly.
    pub strict_trace: bool,
    /// Start each inner solve from the replies stored for the new MIN actions.
    pub warm_start: bool,
    /// With a single critical component, shift the new bias by a constant
    /// instead of solving the stopped problem.
    pub shortcut: bool,
    pub linear: LinearOptions,
    /// Record violations of the convergence laws in the report.
    pub check: bool,
    /// Replaces the bias returned by the inner solve at the given outer
    /// iteration. Each vector must be a bias of the one-player game.
    pub injections: BTreeMap<usize, Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: Tolerances::default(),
            max_outer: 1000,
            max_inner: 10_000,
            naive: false,
            strict_trace: false,
            warm_start: true,
            shortcut: true,
            linear: LinearOptions::default(),
            check: false,
            injections: BTreeMap::new(),
        }
    }
}

impl SolveOptions {
    pub fn inner(&self) -> InnerOptions {
        InnerOptions { tol: self.tol, linear: self.linear, max_iterations: self.max_inner, check: self.check }
    }

    fn warm(&self) -> bool {
        self.warm_start && !self.strict_trace
    }

    fn use_shortcut(&self) -> bool {
        self.shortcut && !self.strict_trace
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The residual fell below `eps_g`.
    Residual,
    /// The improvement step kept every action.
    NoImprovement,
    /// A MIN strategy was selected twice.
    Cycle,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::NoImprovement => "no_improvement",
            StopReason::Cycle => "cycle",
        }
    }
}

/// One policy improvement followed by a value determination.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// States where MIN changed its action.
    pub changed_states: usize,
    /// `|eta^(k) - eta^(k-1)|` in the sup norm.
    pub eta_change: f64,
    pub degenerate: bool,
    /// Components of the critical graph, when it was computed.
    pub critical_components: Option<usize>,
    pub inner_iterations: usize,
    pub projection_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub halfline: HalfLine,
    pub sigma: MinStrategy,
    pub delta: MaxStrategy,
    /// Number of MIN policy improvements.
    pub iterations_outer: usize,
    /// Total MAX policy iterations over all inner solves.
    pub iterations_inner_total: usize,
    pub degenerate: usize,
    pub strongly_degenerate: usize,
    pub residual: f64,
    /// Residual of each half-line `(eta^(k), v^(k))`.
    pub residuals: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub stop_reason: StopReason,
    pub violations: Vec<String>,
    pub wall_seconds: f64,
}

/// True iff `hl` is an invariant half-line of `game` up to `tol.eps_g`.
pub fn check_invariant_halfline(game: &Game, hl: &HalfLine, tol: &Tolerances) -> bool {
    hl.eta.len() == game.n_states() && hl.v.len() == game.n_states() && residual_with(game, hl, tol.eps_eta) <= tol.eps_g
}

/// Conservative MIN improvement at `hl`: lexicographic on the slope, then on
/// the tangent value, keeping `sigma(i)` whenever it is optimal.
pub fn improve(game: &Game, hl: &HalfLine, sigma: &MinStrategy, tol: &Tolerances) -> MinStrategy {
    MinStrategy(
        (0..game.n_states())
            .map(|i| {
                let vals: Vec<(usize, f64)> = min_action_set(game, &hl.eta, i, tol.eps_eta)
                    .into_iter()
                    .map(|a| (a, tangent_action_value(game, &hl.eta, &hl.v, i, a, tol.eps_eta)))
                    .collect();
                let best = vals.iter().fold(f64::INFINITY, |m, &(_, x)| m.min(x));
                let good = |&&(_, x): &&(usize, f64)| x <= best + tol.eps_v;
                if vals.iter().filter(good).any(|&(a, _)| a == sigma.0[i]) {
                    sigma.0[i]
                } else {
                    vals.iter().find(good).expect("nonempty action set").0
                }
            })
            .collect(),
    )
}

fn evaluate(
    game: &Game,
    sigma: &MinStrategy,
    reply: &mut MaxReply,
    opts: &SolveOptions,
    inner: &InnerOptions,
) -> Result<(OnePlayerGame, MultichainSolution), SolveError> {
    let g = restrict_min(game, sigma)?;
    let delta0 = if opts.warm() { reply.under(game, sigma) } else { MaxStrategy::lowest(game.n_states()) };
    let sol = multichain_pi(&g, &delta0, inner)?;
    for (i, &a) in sigma.0.iter().enumerate() {
        reply.set(game, i, a, sol.delta.0[i]);
    }
    Ok((g, sol))
}

fn injected(g: &OnePlayerGame, eta: &[f64], k: usize, opts: &SolveOptions) -> Result<Option<Vec<f64>>, SolveError> {
    let Some(w) = opts.injections.get(&k) else { return Ok(None) };
    let bad = |reason: String| Err(SolveError::BadInjection { iteration: k, reason });
    if w.len() != g.n_states() {
        return bad(format!("expected {} entries, got {}", g.n_states(), w.len()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return bad("non-finite entry".into());
    }
    let res = g.residual(eta, w, opts.tol.eps_eta);
    if res > opts.tol.eps_v {
        return bad(format!("not a bias of the current one-player game (residual {res:e})"));
    }
    Ok(Some(w.clone()))
}

/// Solves `game` by policy iteration on MIN strategies starting from `sigma0`.
pub fn solve(game: &Game, sigma0: &MinStrategy, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    game.check_min_strategy(sigma0)?;
    let n = game.n_states();
    let tol = opts.tol;
    let inner = opts.inner();
    let mut reply = MaxReply::lowest(game);
    let mut sigma = sigma0.clone();
    let mut seen = HashSet::from([sigma.clone()]);
    let mut violations = Vec::new();
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut residuals = Vec::new();

    let (g, sol) = evaluate(game, &sigma, &mut reply, opts, &inner)?;
    let mut inner_total = sol.iterations;
    violations.extend(sol.violations.iter().map(|s| format!("outer iteration 0: {s}")));
    let v0 = injected(&g, &sol.eta, 0, opts)?.unwrap_or(sol.v);
    let mut hl = HalfLine { eta: sol.eta, v: v0 };
    let mut delta = sol.delta;
    let mut prev_critical: Option<Vec<bool>> = None;
    let mut k = 0;
    let stop_reason = loop {
        let res = residual_with(game, &hl, tol.eps_eta);
        residuals.push(res);
        if res <= tol.eps_g {
            break StopReason::Residual;
        }
        let next = improve(game, &hl, &sigma, &tol);
        let changed_states = (0..n).filter(|&i| next.0[i] != sigma.0[i]).count();
        if changed_states == 0 {
            warn!("no improvement at outer iteration {k} with residual {res:e} above {:e}", tol.eps_g);
            break StopReason::NoImprovement;
        }
        if k == opts.max_outer {
            return Err(SolveError::OuterCap { cap: opts.max_outer, residual: res, eta: hl.eta, v: hl.v });
        }
        k += 1;
        if !seen.insert(next.clone()) {
            if opts.check && !opts.naive {
                violations.push(format!("outer iteration {k}: strategy repeated"));
            }
            sigma = next;
            break StopReason::Cycle;
        }
        sigma = next;

        let (g, sol) = evaluate(game, &sigma, &mut reply, opts, &inner)?;
        inner_total += sol.iterations;
        violations.extend(sol.violations.iter().map(|s| format!("outer iteration {k}: {s}")));
        delta = sol.delta;
        let eta = sol.eta;
        let mut v = injected(&g, &eta, k, opts)?.unwrap_or(sol.v);
        let eta_change = sup_dist(&eta, &hl.eta);
        if opts.check {
            if let Some(i) = (0..n).find(|&i| eta[i] > hl.eta[i] + tol.eps_eta) {
                violations.push(format!("outer iteration {k}: slope increased at state {i}"));
            }
        }
        let degenerate = eta_change <= tol.eps_eta;
        if !degenerate && eta_change < 100.0 * tol.eps_eta {
            warn!("outer iteration {k}: slope change {eta_change:e} is close to the degeneracy threshold");
        }
        let mut entry = TraceEntry {
            iteration: k,
            changed_states,
            eta_change,
            degenerate,
            critical_components: None,
            inner_iterations: sol.iterations,
            projection_iterations: 0,
        };
        if degenerate && !opts.naive {
            let gbar = tangent_game(&g, &eta, tol.eps_eta);
            let family = tilde_family(&gbar, &v, tol.eps_v)?;
            let crit = critical_graph(&family);
            let mask = crit.mask(n);
            let u = &hl.v;
            let (projected, defect) = if crit.components.len() == 1 && opts.use_shortcut() {
                let j = crit.nodes[0];
                let c = u[j] - v[j];
                let w: Vec<f64> = (0..n).map(|i| if mask[i] { u[i] } else { v[i] + c }).collect();
                let defect = sup_dist(&gbar.apply(&w), &w);
                (w, defect)
            } else {
                match spectral_projection(&gbar, &mask, u, None, &inner) {
                    Ok(p) => {
                        entry.projection_iterations = p.howard_iterations;
                        violations.extend(p.violations.iter().map(|s| format!("outer iteration {k}: {s}")));
                        (p.v, p.defect)
                    }
                    Err(SolveError::NotSuperHarmonic { excess }) => (Vec::new(), excess),
                    Err(e) => return Err(e),
                }
            };
            if defect > tol.eps_v {
                // the slope moved below the threshold, so v^(k) is not harmonic on C
                warn!("outer iteration {k}: slope change {eta_change:e} treated as nondegenerate (projection defect {defect:e})");
                entry.degenerate = false;
                prev_critical = None;
            } else {
                entry.critical_components = Some(crit.components.len());
                debug!("outer iteration {k}: degenerate with {} critical components", crit.components.len());
                if opts.check {
                    if let Some(i) = (0..n).find(|&i| mask[i] && (projected[i] - u[i]).abs() > 1e-12) {
                        violations.push(format!("outer iteration {k}: bias moved on critical state {i}"));
                    }
                    if let Some(i) = (0..n).find(|&i| projected[i] > u[i] + 1e-10) {
                        violations.push(format!("outer iteration {k}: bias increased at state {i}"));
                    }
                    if let Some(prev) = &prev_critical {
                        if let Some(i) = (0..n).find(|&i| mask[i] && !prev[i]) {
                            violations.push(format!("outer iteration {k}: new critical state {i}"));
                        }
                    }
                }
                prev_critical = Some(mask);
                v = projected;
            }
        } else {
            prev_critical = None;
        }
        trace.push(entry);
        hl = HalfLine { eta, v };
    };

    let residual = *residuals.last().unwrap_or(&f64::NAN);
    let degenerate = trace.iter().filter(|e| e.degenerate).count();
    let strongly_degenerate = trace.iter().filter(|e| e.critical_components.is_some_and(|c| c >= 2)).count();
    Ok(SolveReport {
        halfline: hl,
        sigma,
        delta,
        iterations_outer: k,
        iterations_inner_total: inner_total,
        degenerate,
        strongly_degenerate,
        residual,
        residuals,
        trace,
        stop_reason,
        violations,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
