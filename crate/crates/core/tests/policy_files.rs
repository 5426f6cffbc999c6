mod common;

use darkgames::games::Player;
use darkgames::policy_file::{read_policy, write_policy, Seats};
use darkgames::treeplex::Treeplex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn text_and_binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in common::small_specs() {
        let a = Treeplex::build(&spec, Player::One).unwrap();
        let b = Treeplex::build(&spec, Player::Two).unwrap();
        let ta = common::random_tabular(&a, &mut rng, 0.2);
        let tb = common::random_tabular(&b, &mut rng, 0.2);
        for name in ["p.txt", "p.bin"] {
            let path = dir.path().join(name);
            write_policy(&path, &spec, &[(&a, &ta), (&b, &tb)]).unwrap();
            let back = read_policy(&path, &spec, [&a, &b]).unwrap();
            assert_eq!(back.seats, Seats::Both);
            for (orig, got) in [(&ta, back.table(Player::One)), (&tb, back.table(Player::Two))] {
                let got = got.unwrap();
                let worst = orig.probs.iter().zip(&got.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(worst <= 1e-12, "{spec} {name}: {worst}");
            }
        }
        let path = dir.path().join("two.txt");
        write_policy(&path, &spec, &[(&b, &tb)]).unwrap();
        let back = read_policy(&path, &spec, [&a, &b]).unwrap();
        assert_eq!(back.seats, Seats::One(Player::Two));
        assert!(back.table(Player::One).is_none());
    }
}

#[test]
fn wrong_game_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let specs = common::small_specs();
    let (s1, s2) = (&specs[2], &specs[3]);
    let a = Treeplex::build(s1, Player::One).unwrap();
    let t = darkgames::treeplex::TabularPolicy::uniform(&a);
    let path = dir.path().join("p.txt");
    write_policy(&path, s1, &[(&a, &t)]).unwrap();
    let a2 = Treeplex::build(s2, Player::One).unwrap();
    let b2 = Treeplex::build(s2, Player::Two).unwrap();
    assert!(read_policy(&path, s2, [&a2, &b2]).is_err());
}
