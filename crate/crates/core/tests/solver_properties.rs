use darkgames::games::{GameSpec, Player, Ruleset};
use darkgames::gradient::Game;
use darkgames::solvers::{
    run_solver, Algorithm, DcfrParams, FpState, MmdParams, MmdState, RegretState, RegretVariant, Solver,
    SolverConfig, UpdateScheme,
};

fn dh2() -> Vec<Game> {
    [Ruleset::Classical, Ruleset::Abrupt]
        .into_iter()
        .map(|rs| Game::new(&GameSpec::dark_hex(2, rs).unwrap()).unwrap().with_threads(1))
        .collect()
}

#[test]
fn plus_variants_keep_regrets_nonnegative() {
    for game in dh2() {
        for variant in [RegretVariant::CfrPlus, RegretVariant::PcfrPlus] {
            let mut s = RegretState::new(&game, variant, DcfrParams::default()).unwrap();
            for _ in 0..300 {
                s.step(&game).unwrap();
                for p in 0..2 {
                    assert!(s.regrets(p).iter().all(|&r| r >= 0.0), "{variant:?}");
                }
            }
        }
    }
}

#[test]
fn averages_conserve_flow() {
    for game in dh2() {
        for algo in Algorithm::ALL {
            for scheme in [UpdateScheme::Alternating, UpdateScheme::Simultaneous] {
                let mut cfg = SolverConfig::new(algo);
                cfg.scheme = scheme;
                let mut s = cfg.build(&game).unwrap();
                for t in 1..=200 {
                    s.step(&game).unwrap();
                    if t % 20 == 0 {
                        for p in [Player::One, Player::Two] {
                            let r = s.average(p.index()).flow_residual(game.treeplex(p));
                            assert!(r < 1e-9, "{algo} residual {r}");
                        }
                    }
                }
            }
        }
    }
}

fn max_positive_regret(s: &RegretState) -> f64 {
    (0..2)
        .flat_map(|p| s.regrets(p).iter().copied())
        .fold(0.0, f64::max)
}

#[test]
fn plain_cfr_regret_is_sublinear() {
    for game in dh2() {
        let mut s = RegretState::new(&game, RegretVariant::Cfr, DcfrParams::default()).unwrap();
        let mut points = Vec::new();
        for t in 1..=4096u64 {
            s.step(&game).unwrap();
            if t >= 64 && t.is_power_of_two() {
                points.push((t as f64, max_positive_regret(&s)));
            }
        }
        // bounded by C sqrt(t) with C fitted on the whole range
        let c = points.iter().map(|(t, r)| r / t.sqrt()).fold(0.0, f64::max);
        let first = points[0];
        let last = points[points.len() - 1];
        assert!(c.is_finite());
        assert!(last.1 <= c * last.0.sqrt());
        // average regret must shrink
        assert!(last.1 / last.0 < first.1 / first.0 || last.1 == 0.0, "{points:?}");
    }
}

#[test]
fn mmd_reaches_a_fixed_point() {
    for game in dh2() {
        let mut s = MmdState::new(&game, MmdParams::default()).unwrap();
        let mut converged = false;
        for _ in 0..20_000 {
            s.step(&game).unwrap();
            if s.last_kl() < 1e-6 {
                converged = true;
                break;
            }
        }
        assert!(converged, "kl {} after {} steps", s.last_kl(), s.iterations());
    }
}

#[test]
fn fictitious_play_gap_trends_down() {
    for game in dh2() {
        let mut fp = FpState::new(&game);
        let mut gaps = Vec::new();
        for _ in 0..500 {
            fp.step(&game).unwrap();
            gaps.push(game.nash_gap(&fp.average(0), &fp.average(1)).unwrap());
        }
        let means: Vec<f64> = gaps.chunks(50).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
        for pair in means.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{means:?}");
        }
    }
}

#[test]
fn cfr_plus_improves_between_checkpoints() {
    for game in dh2() {
        let run = run_solver(&game, &SolverConfig::new(Algorithm::CfrPlus), 200, 20).unwrap();
        let at = |t: u64| run.log.iter().find(|r| r.iteration == t).unwrap().nash_gap;
        assert!(at(200) < at(20));
    }
}

#[test]
fn converged_mmd_update_returns_its_input() {
    for game in dh2() {
        let mut s = MmdState::new(&game, MmdParams::default()).unwrap();
        let mut change = f64::INFINITY;
        for _ in 0..5_000 {
            let before: Vec<Vec<f64>> = (0..2).map(|p| s.policy(p).to_vec()).collect();
            s.step(&game).unwrap();
            change = (0..2)
                .flat_map(|p| s.policy(p).iter().zip(&before[p]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if change <= 1e-8 {
                break;
            }
        }
        assert!(change <= 1e-8, "largest change {change}");
    }
}
