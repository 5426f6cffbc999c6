//! End-to-end acceptance run. Prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any criterion fails.
//!
//! The long tier (game counts, the 512-iteration phantom tic-tac-toe run,
//! full-size timings) takes the better part of an hour on one core. Set
//! `DARKGAMES_ACCEPTANCE=quick` to skip it.

mod common;

use std::time::Instant;

use common::{random_pure, random_tabular, small_specs};
use darkgames::dh3::{search_with, verify_winning, OrderedActionStrategy, Prune, SearchOptions};
use darkgames::games::{count_game, GameSpec, Player, Ruleset};
use darkgames::gradient::Game;
use darkgames::oracle::{oracle_best_response, oracle_expected_value, OracleLimits};
use darkgames::solvers::{
    run_solver, Algorithm, DcfrParams, FpState, MmdParams, MmdState, RegretState, RegretVariant, Solver,
    SolverConfig, UpdateScheme,
};
use darkgames::treeplex::{tabular_to_sequence_form, uniform_sequence_form, BoundPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: darkgames::Error) -> String {
    e.to_string()
}

fn game(id: &str) -> std::result::Result<Game, String> {
    let spec: GameSpec = id.parse().map_err(err)?;
    Game::new(&spec).map_err(err)
}

/// Peak resident set size of this process in bytes.
fn peak_rss() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn oracle_equivalence() -> Check {
    let lim = OracleLimits::default();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for spec in small_specs() {
        let game = Game::new(&spec).map_err(err)?;
        let (tp1, tp2) = (game.treeplex(Player::One), game.treeplex(Player::Two));
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + spec.num_cells() as u64 + spec.is_classical() as u64);
        for i in 0..100 {
            let (t1, t2) = if i % 5 == 4 {
                (random_pure(tp1, &mut rng), random_pure(tp2, &mut rng))
            } else {
                (random_tabular(tp1, &mut rng, 0.2), random_tabular(tp2, &mut rng, 0.2))
            };
            let pi1 = BoundPolicy { treeplex: tp1, table: &t1 };
            let pi2 = BoundPolicy { treeplex: tp2, table: &t2 };
            let x = tabular_to_sequence_form(tp1, &t1);
            let y = tabular_to_sequence_form(tp2, &t2);
            let e = game.evaluate(&x, &y).map_err(err)?;
            let v = oracle_expected_value(&spec, &pi1, &pi2, lim).map_err(err)?;
            let b1 = oracle_best_response(&spec, &pi2, Player::One, lim).map_err(err)?.value;
            let b2 = oracle_best_response(&spec, &pi1, Player::Two, lim).map_err(err)?.value;
            for (ours, theirs) in [
                (e.value, v),
                (e.best_response[0], b1),
                (e.best_response[1], b2),
                (e.nash_gap, b1 + b2),
                (e.exploitability(), (b1 + b2) / 2.0),
            ] {
                worst = worst.max((ours - theirs).abs());
            }
            pairs += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("largest deviation {worst:e}"))?;
    Ok(format!("{pairs} profiles, largest deviation {worst:.1e}"))
}

fn game_counts() -> Check {
    // (game, infoset total in millions to 2 decimals, states in billions to 2 decimals)
    let table = [("dh3", 6.07, 19.12), ("adh3", 27.33, 29.31), ("pttt", 5.99, 19.93), ("apttt", 23.31, 27.12)];
    let mut out = Vec::new();
    for (id, infosets, states) in table {
        let spec: GameSpec = id.parse().map_err(err)?;
        let t = Instant::now();
        let c = count_game(&spec).map_err(err)?;
        let i = (c.total_infostates() as f64 / 1e4).round() / 100.0;
        let s = (c.histories() as f64 / 1e7).round() / 100.0;
        ensure(i == infosets && s == states, || {
            format!("{id}: {} infosets, {} states", c.total_infostates(), c.histories())
        })?;
        out.push(format!("{id} {i}M/{s}B {:.0}s", t.elapsed().as_secs_f64()));
    }
    Ok(out.join(", "))
}

fn dh3_certificate() -> Check {
    let spec = GameSpec::dark_hex(3, Ruleset::Classical).map_err(err)?;
    let t = Instant::now();
    let report = search_with(&spec, &SearchOptions { threads: 1, ..Default::default() }).map_err(err)?;
    let strategy = report.strategy.ok_or("search found no strategy")?;
    let searched = t.elapsed().as_secs_f64();
    // verify what a reader of the file would see
    let mut text = Vec::new();
    strategy.write_text(&mut text).map_err(err)?;
    let strategy = OrderedActionStrategy::read_text(&text[..]).map_err(err)?;
    let t = Instant::now();
    let v = verify_winning(&Game::new(&spec).map_err(err)?, &strategy).map_err(err)?;
    ensure((v.min_value - 1.0).abs() <= 1e-9, || format!("min value {}", v.min_value))?;
    ensure(v.value_vs_uniform == 1.0, || format!("value vs uniform {:e}", v.value_vs_uniform))?;
    let pi = search_with(
        &spec,
        &SearchOptions { prune: Prune::PerfectInformation, threads: 1, ..Default::default() },
    )
    .map_err(err)?;
    ensure(pi.strategy.as_ref() == Some(&strategy), || "prunes disagree".into())?;
    Ok(format!(
        "{} lists, search {searched:.1}s, verify {:.1}s, min value {}, value vs uniform {}",
        strategy.len(),
        t.elapsed().as_secs_f64(),
        v.min_value,
        v.value_vs_uniform
    ))
}

fn pttt_dcfr() -> Check {
    let g = game("pttt")?;
    let t = Instant::now();
    let run = run_solver(&g, &SolverConfig::new(Algorithm::Dcfr), 512, 0).map_err(err)?;
    let row = run.log.last().ok_or("empty log")?;
    let target = 0.0004070;
    let within = |q: f64| q >= target / 2.0 && q <= target * 2.0;
    let detail = format!(
        "value {:.7}, exploitability {:.7}, nash gap {:.7}, {:.0}s",
        row.value,
        row.exploitability,
        row.nash_gap,
        t.elapsed().as_secs_f64()
    );
    ensure((row.value - 0.6666511).abs() <= 1e-3, || format!("value off: {detail}"))?;
    let matched = match (within(row.exploitability), within(row.nash_gap)) {
        (true, true) => "both conventions",
        (true, false) => "halved convention only",
        (false, true) => "unhalved convention only",
        (false, false) => return Err(format!("neither convention within 2x: {detail}")),
    };
    let ratios = format!(
        "ratios to 0.0004070: halved {:.2}, unhalved {:.2}",
        row.exploitability / target,
        row.nash_gap / target
    );
    Ok(format!("{detail}; {ratios}; within 2x under {matched}"))
}

fn dh2_games() -> std::result::Result<Vec<Game>, String> {
    [Ruleset::Classical, Ruleset::Abrupt]
        .into_iter()
        .map(|rs| Ok(Game::new(&GameSpec::dark_hex(2, rs).map_err(err)?).map_err(err)?.with_threads(1)))
        .collect()
}

fn solver_properties() -> Check {
    for game in dh2_games()? {
        let id = game.spec().to_string();
        let mut s = RegretState::new(&game, RegretVariant::CfrPlus, DcfrParams::default()).map_err(err)?;
        for t in 1..=500 {
            s.step(&game).map_err(err)?;
            ensure((0..2).all(|p| s.regrets(p).iter().all(|&r| r >= 0.0)), || {
                format!("{id}: negative cfr+ regret at iteration {t}")
            })?;
        }

        for algo in Algorithm::ALL {
            for scheme in [UpdateScheme::Alternating, UpdateScheme::Simultaneous] {
                let mut cfg = SolverConfig::new(algo);
                cfg.scheme = scheme;
                let mut s = cfg.build(&game).map_err(err)?;
                for t in 1..=200 {
                    s.step(&game).map_err(err)?;
                    for p in [Player::One, Player::Two] {
                        let r = s.average(p.index()).flow_residual(game.treeplex(p));
                        ensure(r < 1e-9, || format!("{id} {algo}: flow residual {r:e} at {t}"))?;
                    }
                }
            }
        }

        let mut s = RegretState::new(&game, RegretVariant::Cfr, DcfrParams::default()).map_err(err)?;
        let mut points = Vec::new();
        for t in 1..=4096u64 {
            s.step(&game).map_err(err)?;
            if t >= 64 && t.is_power_of_two() {
                let r = (0..2).flat_map(|p| s.regrets(p).iter().copied()).fold(0.0, f64::max);
                points.push((t as f64, r));
            }
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        let c = points[..points.len() - 1].iter().map(|(t, r)| r / t.sqrt()).fold(0.0, f64::max);
        ensure(last.1 <= c.max(1e-12) * last.0.sqrt() * 1.5, || format!("{id}: regret grows: {points:?}"))?;
        ensure(last.1 / last.0 < first.1 / first.0 || last.1 == 0.0, || {
            format!("{id}: average regret not shrinking: {points:?}")
        })?;

        let mut m = MmdState::new(&game, MmdParams::default()).map_err(err)?;
        while m.last_kl() >= 1e-6 && m.iterations() < 20_000 {
            m.step(&game).map_err(err)?;
        }
        ensure(m.last_kl() < 1e-6, || format!("{id}: mmd kl {:e}", m.last_kl()))?;

        let mut fp = FpState::new(&game);
        let mut gaps = Vec::new();
        for _ in 0..500 {
            fp.step(&game).map_err(err)?;
            gaps.push(game.nash_gap(&fp.average(0), &fp.average(1)).map_err(err)?);
        }
        let means: Vec<f64> = gaps.chunks(50).map(|w| w.iter().sum::<f64>() / 50.0).collect();
        ensure(means.windows(2).all(|w| w[1] <= w[0] + 1e-12), || format!("{id}: fp windows {means:?}"))?;
    }
    Ok("cfr+ regrets, flow, cfr sublinearity, mmd kl < 1e-6, fp windows on dh2 and adh2".into())
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn determinism(long: bool) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for spec in small_specs() {
        let base = Game::new(&spec).map_err(err)?;
        let [x, y] = [Player::One, Player::Two]
            .map(|p| tabular_to_sequence_form(base.treeplex(p), &random_tabular(base.treeplex(p), &mut rng, 0.1)));
        let mut reference = None;
        for threads in [1, 2, 8, 1, 2, 8] {
            let g = Game::new(&spec).map_err(err)?.with_threads(threads);
            let (g1, g2) = g.gradients(&x, &y).map_err(err)?;
            let got = (bits(&g1.values), bits(&g2.values));
            if let Some(r) = &reference {
                ensure(r == &got, || format!("{spec}: gradients differ with {threads} threads"))?;
            } else {
                reference = Some(got);
            }
        }
        for algo in Algorithm::ALL {
            let logs: Vec<_> = [1, 2, 8, 1]
                .iter()
                .map(|&t| run_solver(&Game::new(&spec).unwrap().with_threads(t), &SolverConfig::new(algo), 100, 10))
                .collect::<darkgames::Result<_>>()
                .map_err(err)?;
            for l in &logs[1..] {
                let same = l.log.len() == logs[0].log.len() && l.log.iter().zip(&logs[0].log).all(|(a, b)| a.same_numbers(b));
                ensure(same, || format!("{spec} {algo}: logs differ"))?;
            }
        }
    }
    if !long {
        return Ok("dh1/dh2 gradients and solver logs (full-size pass skipped)".into());
    }
    let spec: GameSpec = "dh3".parse().map_err(err)?;
    let mut g = Game::new(&spec).map_err(err)?;
    let x = uniform_sequence_form(g.treeplex(Player::One));
    let y = uniform_sequence_form(g.treeplex(Player::Two));
    let mut reference = None;
    for threads in [1, 2, 8] {
        g.set_threads(threads);
        let (g1, g2) = g.gradients(&x, &y).map_err(err)?;
        let got = (bits(&g1.values), bits(&g2.values));
        if let Some(r) = &reference {
            ensure(r == &got, || format!("dh3: gradients differ with {threads} threads"))?;
        } else {
            reference = Some(got);
        }
    }
    Ok("dh1/dh2 gradients and solver logs, dh3 uniform gradients".into())
}

fn performance() -> Check {
    let mut out = Vec::new();
    let mut slowest = 0.0f64;
    for id in ["dh3", "adh3", "pttt", "apttt"] {
        let g = game(id)?;
        let x = uniform_sequence_form(g.treeplex(Player::One));
        let y = uniform_sequence_form(g.treeplex(Player::Two));
        let t = Instant::now();
        g.evaluate(&x, &y).map_err(err)?;
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        out.push(format!("{id} {secs:.0}s"));
    }
    let peak = peak_rss().unwrap_or(0) as f64 / (1u64 << 30) as f64;
    let threads = darkgames::gradient::default_threads();
    let detail = format!("{} on {threads} thread(s), peak memory {peak:.2} GiB", out.join(", "));
    ensure(slowest <= 300.0 && peak <= 16.0, || detail.clone())?;
    Ok(detail)
}

fn main() {
    let long = std::env::var("DARKGAMES_ACCEPTANCE").map_or(true, |v| v != "quick");
    let criteria: [(u32, &str, bool, &dyn Fn() -> Check); 7] = [
        (1, "oracle equivalence", false, &oracle_equivalence),
        (2, "game counts", true, &game_counts),
        (3, "dh3 certificate", false, &dh3_certificate),
        (4, "pttt dcfr 512", true, &pttt_dcfr),
        (5, "solver properties", false, &solver_properties),
        (6, "determinism", false, &|| determinism(long)),
        (7, "gradient performance", true, &performance),
    ];
    let mut failed = 0;
    for (n, name, slow, check) in criteria {
        if slow && !long {
            println!("criterion {n} {name}: SKIP (quick mode)");
            continue;
        }
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail}) [{:.1}s]", t.elapsed().as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({detail}) [{:.1}s]", t.elapsed().as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
