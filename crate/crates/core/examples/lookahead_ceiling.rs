//! Return reachable by exhaustive lookahead with a perfect model of the world.
//!
//! `HighwayWorld` is `Clone` and its traffic randomness lives inside the world, so a
//! cloned world predicts the future exactly. Searching every action sequence `depth`
//! steps ahead gives a reference for what a learned policy can score, with and without
//! epsilon-random actions mixed in.
//!
//! ```text
//! cargo run --release -p highway-core --example lookahead_ceiling -- <depth> <episodes> <epsilon>
//! ```

use highway_core::{Action, EnvConfig, HighwayWorld};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn search(world: &HighwayWorld, depth: usize) -> (f64, Action) {
    let mut best = (f64::NEG_INFINITY, Action::Maintain);
    for a in Action::ALL {
        let mut next = world.clone();
        let r = next.step(a).expect("episode still running");
        let mut value = r.reward;
        if !r.done && depth > 1 {
            value += search(&next, depth - 1).0;
        }
        if value > best.0 {
            best = (value, a);
        }
    }
    best
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let depth: usize = arg(0, "4").parse().expect("depth");
    let episodes: u64 = arg(1, "50").parse().expect("episodes");
    let epsilon: f64 = arg(2, "0").parse().expect("epsilon");

    let mut world = HighwayWorld::new(EnvConfig::default()).expect("default config is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let (mut total, mut collisions, mut speed) = (0.0, 0, 0.0);
    for seed in 0..episodes {
        world.reset(1000 + seed);
        loop {
            let mut action = search(&world, depth).1;
            if rng.gen::<f64>() < epsilon {
                action = Action::ALL[rng.gen_range(0..Action::COUNT)];
            }
            let r = world.step(action).expect("episode still running");
            total += r.reward;
            if r.done {
                collisions += usize::from(r.info.collided);
                speed += r.info.mean_speed_mps;
                break;
            }
        }
    }
    let n = episodes as f64;
    println!(
        "depth {depth}, epsilon {epsilon}: mean return {:.2}, collision rate {:.3}, mean speed {:.1} m/s over {episodes} episodes",
        total / n,
        collisions as f64 / n,
        speed / n
    );
}
