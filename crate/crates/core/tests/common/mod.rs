//! Independent oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use highway_core::agent::{Agent, AgentConfig, Algo, EpsilonSchedule, Transition};
use highway_core::env::collision::OrientedRect;
use highway_core::env::LaneGeometry;
use highway_core::kinematics::{integrate_step, KinematicsParams, VehicleState};
use highway_core::nn::{Aggregation, HeadKind, OptimizerKind, QFunctionNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_net(head: HeadKind, r: &mut ChaCha8Rng) -> (QFunctionNet, Vec<f64>) {
    let input = r.gen_range(2..9);
    let hidden: Vec<usize> = (0..r.gen_range(1..3)).map(|_| r.gen_range(3..12)).collect();
    let dims: Vec<usize> = std::iter::once(input).chain(hidden).collect();
    let mut net = QFunctionNet::new(&dims, 5, head, r).unwrap();
    // non-zero biases so every layer's bias gradient is exercised
    for p in net.params_mut() {
        *p += r.gen_range(-0.1..0.1);
    }
    let obs = (0..input).map(|_| r.gen_range(-1.0..1.0)).collect();
    (net, obs)
}

/// Max relative error between `backward` and central differences of `dot(q, w)` for
/// one random network, input and output weighting.
pub fn gradient_check(head: HeadKind, seed: u64, h: f64) -> f64 {
    let mut r = rng(seed);
    let (net, obs) = random_net(head, &mut r);
    let w: Vec<f64> = (0..5).map(|_| r.gen_range(-1.0..1.0)).collect();
    let loss = |n: &QFunctionNet| -> f64 { n.q(&obs).unwrap().iter().zip(&w).map(|(q, w)| q * w).sum() };
    let (_, cache) = net.q_values(&obs).unwrap();
    let analytic = net.backward(&cache, &w).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for i in 0..net.num_params() {
        let p0 = net.params()[i];
        probe.params_mut()[i] = p0 + h;
        let up = loss(&probe);
        probe.params_mut()[i] = p0 - h;
        let down = loss(&probe);
        probe.params_mut()[i] = p0;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

/// For one random dueling network: `|q[argmax A] - V|` and the largest q change after
/// adding a constant to every advantage bias.
pub fn dueling_identity(seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (net, obs) = random_net(HeadKind::Dueling(Aggregation::Max), &mut r);
    let (q, cache) = net.q_values(&obs).unwrap();
    let adv = cache.advantages().unwrap();
    let mut a_star = 0;
    for (i, a) in adv.iter().enumerate() {
        if *a > adv[a_star] {
            a_star = i;
        }
    }
    let identity = (q[a_star] - cache.value().unwrap()).abs();

    let c = r.gen_range(-5.0..5.0);
    let (_, layer) = net
        .named_layers()
        .into_iter()
        .find(|(name, _)| name == "head.advantage")
        .unwrap();
    let bias = layer.offset + layer.fan_in * layer.fan_out;
    let mut shifted = net.clone();
    for p in &mut shifted.params_mut()[bias..bias + layer.fan_out] {
        *p += c;
    }
    let q2 = shifted.q(&obs).unwrap();
    let shift = q.iter().zip(&q2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (identity, shift)
}

pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub length: f64,
    pub width: f64,
    pub heading: f64,
}

impl Rect {
    pub fn random(r: &mut ChaCha8Rng) -> Self {
        Self {
            cx: r.gen_range(-6.0..6.0),
            cy: r.gen_range(-6.0..6.0),
            length: r.gen_range(1.0..8.0),
            width: r.gen_range(0.5..3.0),
            heading: r.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        }
    }

    /// Counter-clockwise corners.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.heading.sin_cos();
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)]
            .map(|(u, v)| (self.cx + u * c - v * s, self.cy + u * s + v * c))
    }

    /// `nu x nv` grid spanning the rectangle, boundary included, built from the corners.
    pub fn grid(&self, nu: usize, nv: usize) -> Vec<(f64, f64)> {
        let [p0, p1, _, p3] = self.corners();
        let mut pts = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            let a = i as f64 / (nu - 1) as f64;
            for j in 0..nv {
                let b = j as f64 / (nv - 1) as f64;
                pts.push((
                    p0.0 + a * (p1.0 - p0.0) + b * (p3.0 - p0.0),
                    p0.1 + a * (p1.1 - p0.1) + b * (p3.1 - p0.1),
                ));
            }
        }
        pts
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        let c = self.corners();
        (0..4).all(|k| {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
        })
    }

    pub fn boundary_distance(&self, p: (f64, f64)) -> f64 {
        let c = self.corners();
        (0..4)
            .map(|k| segment_distance(p, c[k], c[(k + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sat(&self) -> OrientedRect {
        OrientedRect::new(self.cx, self.cy, self.length, self.width, self.heading)
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Distance from any corner of one rectangle to the other's boundary. Small values mean
/// the pair touches, nearly touches, or overlaps only by a sliver.
pub fn pair_margin(a: &Rect, b: &Rect) -> f64 {
    let from = |x: &Rect, y: &Rect| x.corners().iter().map(|&p| y.boundary_distance(p)).fold(f64::INFINITY, f64::min);
    from(a, b).min(from(b, a))
}

pub fn sampled_overlap(a: &Rect, b: &Rect) -> bool {
    a.grid(100, 40).into_iter().any(|p| b.contains(p)) || b.grid(100, 40).into_iter().any(|p| a.contains(p))
}

#[derive(Debug, Default)]
pub struct SatReport {
    pub compared: usize,
    pub excluded: usize,
    pub overlapping: usize,
    pub mismatches: usize,
}

pub fn sat_against_sampling(pairs: usize, seed: u64, margin: f64) -> SatReport {
    let mut r = rng(seed);
    let mut rep = SatReport::default();
    for _ in 0..pairs {
        let (a, b) = (Rect::random(&mut r), Rect::random(&mut r));
        if pair_margin(&a, &b) < margin {
            rep.excluded += 1;
            continue;
        }
        let oracle = sampled_overlap(&a, &b);
        let sat = a.sat().intersects(&b.sat());
        rep.compared += 1;
        rep.overlapping += usize::from(oracle);
        rep.mismatches += usize::from(oracle != sat);
    }
    rep
}

/// Circle through three points.
pub fn circumradius(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let side = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    let area2 = ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs();
    side(a, b) * side(b, c) * side(c, a) / (2.0 * area2)
}

/// Relative deviation of the constant-steering path radius from `l / sin(beta)`.
pub fn circle_radius_error(delta: f64, v: f64, dt: f64, duration: f64) -> (f64, f64) {
    let params = KinematicsParams { dt, ..KinematicsParams::default() };
    let road = LaneGeometry::default();
    let mut s = VehicleState::new(0.0, 4.0, v, &road);
    let steps = (duration / dt).round() as usize;
    let mut samples = Vec::new();
    for k in 0..=steps {
        if k % (steps / 2) == 0 {
            samples.push((s.x, s.y));
        }
        s = integrate_step(&s, 0.0, delta, &params, &road);
    }
    let measured = circumradius(samples[0], samples[1], samples[2]);
    let beta = (0.5 * delta.tan()).atan();
    let expected = params.l / beta.sin();
    (measured, (measured - expected).abs() / expected)
}

/// Two states, two actions, deterministic transitions.
/// state 0: a0 -> (0, r=0), a1 -> (1, r=1); state 1: a0 -> (0, r=2), a1 -> (1, r=0.5).
pub const TOY_NEXT: [[usize; 2]; 2] = [[0, 1], [0, 1]];
pub const TOY_REWARD: [[f64; 2]; 2] = [[0.0, 1.0], [2.0, 0.5]];

pub fn toy_value_iteration(gamma: f64, iters: usize) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..iters {
        let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
        let mut next = [[0.0; 2]; 2];
        for s in 0..2 {
            for a in 0..2 {
                next[s][a] = TOY_REWARD[s][a] + gamma * v[TOY_NEXT[s][a]];
            }
        }
        q = next;
    }
    q
}

fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2];
    v[s] = 1.0;
    v
}

/// Trains the agent on the toy MDP and returns the largest deviation from value
/// iteration over all (state, action) pairs.
pub fn toy_mdp_error(algo: Algo, seed: u64) -> f64 {
    let config = AgentConfig {
        algo,
        hidden: vec![],
        optimizer: OptimizerKind::Adam,
        learning_rate: 0.02,
        learn_start: 64,
        batch_size: 32,
        buffer_capacity: 2000,
        target_sync_every: 20,
        epsilon: EpsilonSchedule {
            eps_start: 1.0,
            eps_end: 1.0,
            tau: 1.0,
        },
        ..AgentConfig::default()
    };
    let mut agent = Agent::new(config, 2, 2, Agent::seeded_rng(seed)).unwrap();
    let mut s = 0;
    for _ in 0..6000 {
        let a = agent.act(&one_hot(s)).unwrap();
        let s_next = TOY_NEXT[s][a];
        agent.remember(Transition {
            s: one_hot(s),
            a,
            r: TOY_REWARD[s][a],
            s_next: one_hot(s_next),
            done: false,
        });
        agent.learn().unwrap();
        s = s_next;
    }
    let oracle = toy_value_iteration(0.8, 100);
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let q = agent.net().q(&one_hot(s)).unwrap();
        for a in 0..2 {
            worst = worst.max((q[a] - oracle[s][a]).abs());
        }
    }
    worst
}
