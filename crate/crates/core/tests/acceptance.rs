//! Acceptance run: one pass/fail line per criterion.
//!
//! `MPPI_ACCEPTANCE=1,3` restricts the run to the listed criteria.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mppi::critical::critical_graph;
use mppi::game::{Game, MinStrategy};
use mppi::generators::{
    example_5node, gen_catmouse, gen_richman, random_family, random_small_game, CatMouseConfig, RichmanConfig, SmallGameConfig,
};
use mppi::oracles::{brute_force_critical, brute_force_value, value_iteration_slope, DEFAULT_CAP};
use mppi::shapley::apply;
use mppi::two_player::{solve, SolveOptions, SolveReport, StopReason};

type Outcome = Result<String, String>;

fn checked() -> SolveOptions {
    SolveOptions { check: true, ..Default::default() }
}

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Violations found by solves of the property suite.
#[derive(Default)]
struct Ledger {
    solves: usize,
    violations: Vec<String>,
}

impl Ledger {
    fn record(&mut self, what: &str, rep: &SolveReport) {
        self.solves += 1;
        self.violations.extend(rep.violations.iter().map(|v| format!("{what}: {v}")));
    }
}

fn sigma0_5node() -> MinStrategy {
    MinStrategy(vec![1, 1, 3, 3, 1])
}

fn criterion_1(ledger: &mut Ledger) -> Outcome {
    let t = Instant::now();
    let g = example_5node();
    let rep = solve(&g, &sigma0_5node(), &checked()).map_err(|e| e.to_string())?;
    ledger.record("five-node", &rep);
    ensure(rep.halfline.eta.iter().all(|&e| e == 0.0), || format!("eta = {:?}", rep.halfline.eta))?;
    ensure(rep.sigma.0[4] == 3, || format!("final sigma = {:?}", rep.sigma.0))?;
    ensure(rep.strongly_degenerate == 1, || format!("{} strongly degenerate iterations", rep.strongly_degenerate))?;
    ensure(rep.residual <= 1e-12, || format!("residual {:e}", rep.residual))?;
    let mut strict = SolveOptions { strict_trace: true, check: true, ..Default::default() };
    strict.injections.insert(0, vec![0.0, 0.0, -0.5, -0.5, 0.0]);
    let rep = solve(&g, &sigma0_5node(), &strict).map_err(|e| e.to_string())?;
    ledger.record("five-node strict", &rep);
    let expected = [0.0, 0.0, -0.5, -0.5, -0.5];
    ensure(sup(&rep.halfline.v, &expected) <= 1e-12, || format!("strict-trace v = {:?}", rep.halfline.v))?;
    ensure(rep.residual <= 1e-12, || format!("strict-trace residual {:e}", rep.residual))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("sigma = {:?}, v = {:?}, {secs:.3} s", rep.sigma.0, rep.halfline.v))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut opts = SolveOptions { naive: true, strict_trace: true, ..Default::default() };
    opts.injections.insert(0, vec![0.0, 0.0, -0.5, -0.5, 0.0]);
    opts.injections.insert(1, vec![0.0, 0.0, 0.5, 0.5, 0.5]);
    let rep = solve(&example_5node(), &sigma0_5node(), &opts).map_err(|e| e.to_string())?;
    ensure(rep.stop_reason == StopReason::Cycle, || format!("stopped by {:?}", rep.stop_reason))?;
    ensure(rep.iterations_outer == 2 && rep.sigma == sigma0_5node(), || format!("cycle at {} to {:?}", rep.iterations_outer, rep.sigma.0))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("sigma^(2) = sigma^(0), {secs:.3} s"))
}

fn small_games() -> Vec<Game> {
    (0..200).map(|s| random_small_game(&SmallGameConfig::default(), 1000 + s)).collect()
}

fn criterion_3(ledger: &mut Ledger) -> Outcome {
    let t = Instant::now();
    let (mut worst_bf, mut worst_vi) = (0.0f64, 0.0f64);
    for (s, g) in small_games().iter().enumerate() {
        let rep = solve(g, &MinStrategy::lowest(g.n_states()), &checked()).map_err(|e| format!("instance {s}: {e}"))?;
        ledger.record(&format!("random game {s}"), &rep);
        ensure(rep.residual <= 1e-12, || format!("instance {s}: residual {:e}", rep.residual))?;
        let bf = brute_force_value(g, DEFAULT_CAP).map_err(|e| e.to_string())?;
        let vi = value_iteration_slope(g, 100_000);
        let (e_bf, e_vi) = (sup(&rep.halfline.eta, &bf), sup(&rep.halfline.eta, &vi));
        ensure(e_bf <= 1e-9, || format!("instance {s}: brute force differs by {e_bf:e}"))?;
        ensure(e_vi <= 5e-5, || format!("instance {s}: value iteration differs by {e_vi:e}"))?;
        worst_bf = worst_bf.max(e_bf);
        worst_vi = worst_vi.max(e_vi);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200 games, max gap {worst_bf:.1e} to brute force, {worst_vi:.1e} to value iteration, {secs:.1} s"))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut arcs = 0;
    for s in 0..200 {
        let fam = random_family(6, 3, 5000 + s);
        let fast = critical_graph(&fam);
        let slow = brute_force_critical(&fam, DEFAULT_CAP).map_err(|e| e.to_string())?;
        ensure(fast.arcs == slow.arcs, || format!("family {s}: {:?} vs {:?}", fast.arcs, slow.arcs))?;
        arcs += fast.arcs.len();
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200 families, {arcs} critical arcs in total, {secs:.1} s"))
}

fn criterion_5(ledger: &mut Ledger) -> Outcome {
    let t = Instant::now();
    let (mut max_outer, mut with_strong, mut worst) = (0, 0, 0.0f64);
    for seed in 0..100 {
        let g = gen_richman(&RichmanConfig { n: 1000, out_degree: 10, seed });
        let rep = solve(&g, &MinStrategy::lowest(1000), &checked()).map_err(|e| format!("seed {seed}: {e}"))?;
        ledger.record(&format!("richman 1000 seed {seed}"), &rep);
        ensure(rep.residual <= 1e-12, || format!("seed {seed}: residual {:e}", rep.residual))?;
        max_outer = max_outer.max(rep.iterations_outer);
        worst = worst.max(rep.residual);
        with_strong += (rep.strongly_degenerate > 0) as usize;
    }
    let frac = with_strong as f64 / 100.0;
    let secs = t.elapsed().as_secs_f64();
    let summary = format!("max outer {max_outer}, strongly degenerate fraction {frac:.2}, worst residual {worst:.1e}, {secs:.1} s");
    ensure(max_outer <= 30, || summary.clone())?;
    ensure(frac > 0.0 && frac < 0.4, || summary.clone())?;
    ensure(secs < 600.0, || summary.clone())?;
    Ok(summary)
}

fn criterion_6(ledger: &mut Ledger) -> Outcome {
    let t = Instant::now();
    let g = gen_richman(&RichmanConfig { n: 100_000, out_degree: 10, seed: 1 });
    let rep = solve(&g, &MinStrategy::lowest(100_000), &checked()).map_err(|e| e.to_string())?;
    ledger.record("richman 100000", &rep);
    let secs = t.elapsed().as_secs_f64();
    let summary = format!(
        "outer {}, inner {}, strongly degenerate {}, residual {:.1e}, {secs:.1} s",
        rep.iterations_outer, rep.iterations_inner_total, rep.strongly_degenerate, rep.residual
    );
    ensure(rep.residual <= 1e-12 && rep.iterations_outer <= 30 && secs < 1800.0, || summary.clone())?;
    Ok(summary)
}

fn criterion_7(ledger: &mut Ledger) -> Outcome {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for speed in [0.999, 1.001, 1.0] {
        let t = Instant::now();
        let cfg = CatMouseConfig::new(65, speed);
        let cm = gen_catmouse(&cfg);
        let n = cm.game.n_states();
        let rep = solve(&cm.game, &MinStrategy::lowest(n), &checked()).map_err(|e| format!("speed {speed}: {e}"))?;
        ledger.record(&format!("cat and mouse {speed}"), &rep);
        let mut fail = |ok: bool, msg: String| {
            if !ok {
                failures.push(format!("speed {speed}: {msg}"));
            }
        };
        fail(rep.residual <= 1e-12, format!("residual {:e}", rep.residual));
        let eta = cm.rescale(&rep.halfline.eta);
        let norm2: Vec<f64> = cm.coords.iter().map(|(x, y)| x * x + y * y).collect();
        let inside: Vec<bool> = norm2.iter().map(|r| r.sqrt() < cfg.freeze_radius).collect();
        let detail = if speed < 1.0 {
            let outer: Vec<f64> = (0..n).filter(|&i| !inside[i]).map(|i| eta[i]).collect();
            let (lo, hi) = outer.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            let centre = (0..n).filter(|&i| inside[i]).fold(0.0f64, |m, i| m.max(eta[i].abs()));
            fail(hi - lo <= 1e-6 && lo >= 0.40 && hi <= 0.50, format!("outside values in [{lo}, {hi}]"));
            fail(centre <= 1e-9, format!("|eta| = {centre:e} inside the ball"));
            format!("eta in [{lo:.4}, {hi:.4}] outside the ball, {centre:.0e} inside")
        } else if speed > 1.0 {
            let m = eta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            fail(m <= 0.02, format!("|eta| = {m}"));
            format!("|eta| <= {m:.1e}")
        } else {
            let d = sup(&eta, &norm2);
            fail(d <= 0.05, format!("|eta - |x|^2| = {d}"));
            format!("|eta - |x|^2| <= {d:.3}")
        };
        let vi = value_iteration_slope(&cm.game, 20_000);
        let d = sup(&vi, &rep.halfline.eta);
        let vnorm = rep.halfline.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        fail(d <= 1e-3, format!("value iteration differs by {d:.2e} per step (|v| = {vnorm:.1})"));
        let secs = t.elapsed().as_secs_f64();
        fail(secs < 1200.0, format!("took {secs:.1} s"));
        lines.push(format!("speed {speed}: {detail}, outer {}, VI gap {d:.1e}, {secs:.1} s", rep.iterations_outer));
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("{}; {}", failures.join("; "), lines.join("; ")))
    }
}

fn criterion_8(ledger: &Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let games = small_games();
    for k in 0..1000 {
        let g = &games[k % games.len()];
        let n = g.n_states();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let c: f64 = rng.random_range(-5.0..5.0);
        let (fx, fy) = (apply(g, &x), apply(g, &y));
        let xc: Vec<f64> = x.iter().map(|v| v + c).collect();
        let fxc: Vec<f64> = fx.iter().map(|v| v + c).collect();
        ensure(sup(&apply(g, &xc), &fxc) <= 1e-12, || format!("evaluation {k}: homogeneity"))?;
        ensure(sup(&fx, &fy) <= sup(&x, &y) + 1e-12, || format!("evaluation {k}: nonexpansiveness"))?;
        let hi: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
        ensure(apply(g, &hi).iter().zip(&fx).all(|(a, b)| *a >= b - 1e-12), || format!("evaluation {k}: monotonicity"))?;
    }
    ensure(ledger.solves > 0, || "no solves were checked".into())?;
    ensure(ledger.violations.is_empty(), || format!("{} violations, first: {}", ledger.violations.len(), ledger.violations[0]))?;
    Ok(format!("{} checked solves and 1000 operator evaluations, zero violations", ledger.solves))
}

fn main() {
    let selected: Option<Vec<usize>> =
        std::env::var("MPPI_ACCEPTANCE").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let want = |k: usize| selected.as_ref().is_none_or(|s| s.contains(&k));
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let mut report = |k: usize, outcome: Outcome| {
        match &outcome {
            Ok(msg) => println!("criterion {k}: PASS ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k}: FAIL ({msg})");
            }
        }
    };
    if want(1) {
        report(1, criterion_1(&mut ledger));
    }
    if want(2) {
        report(2, criterion_2());
    }
    if want(3) {
        report(3, criterion_3(&mut ledger));
    }
    if want(4) {
        report(4, criterion_4());
    }
    if want(5) {
        report(5, criterion_5(&mut ledger));
    }
    if want(6) {
        report(6, criterion_6(&mut ledger));
    }
    if want(7) {
        report(7, criterion_7(&mut ledger));
    }
    if want(8) {
        report(8, criterion_8(&ledger));
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
