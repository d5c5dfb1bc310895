//! Built-in instances: the two-period storage example, seeded random
//! networks for property tests, and the larger synthetic scenarios used for
//! timing and static/dynamic comparisons.
//!
//! Every generator here returns networks *before* augmentation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{DemandSchedule, Device, Generator, Line, Network, Storage, TerminalSoc};

/// One node, two periods, demand 1 MW in each. A gas unit (10 MW, $1/MWh,
/// 500 tCO₂/MWh), solar available only in the first period (10 MW,
/// $0.1/MWh, clean) and a lossless 10 MWh / 10 MW battery that starts empty.
pub fn storage_toy() -> (Network, DemandSchedule) {
    let mut net = Network::new(1, 2)
        .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 500.0).named("gas")))
        .with_device(Device::StaticGenerator(
            Generator::new(0, vec![10.0, 0.0], 0.1, 0.0).named("solar"),
        ))
        .with_device(Device::Storage(Storage {
            name: Some("battery".into()),
            ..Storage::new(0, 10.0, 10.0, 1.0)
        }));
    net.description = Some(
        "two-period storage example; the unit costs 1 and 0.1 are linear $/MWh coefficients".into(),
    );
    let demand = DemandSchedule::new(vec![vec![1.0], vec![1.0]]).expect("static demand");
    (net, demand)
}

/// Size limits for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub max_nodes: usize,
    pub max_horizon: usize,
    pub max_devices: usize,
    /// Quadratic cost coefficients are drawn from `[quad_min, quad_max]`.
    pub quad_min: f64,
    pub quad_max: f64,
    pub allow_storage: bool,
    pub allow_ramp: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_nodes: 5,
            max_horizon: 6,
            max_devices: 6,
            quad_min: 1e-3,
            quad_max: 1.0,
            allow_storage: true,
            allow_ramp: true,
        }
    }
}

fn connected_lines(rng: &mut ChaCha8Rng, n: usize, n_lines: usize, rating: impl Fn(&mut ChaCha8Rng) -> Option<f64>) -> Vec<Line> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut lines = Vec::new();
    for k in 1..n {
        let from = order[rng.gen_range(0..k)];
        lines.push(Line {
            from,
            to: order[k],
            susceptance: rng.gen_range(5.0..20.0),
            rating: rating(rng),
        });
    }
    while lines.len() < n_lines && n > 1 {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        if from == to {
            continue;
        }
        lines.push(Line {
            from,
            to,
            susceptance: rng.gen_range(5.0..20.0),
            rating: rating(rng),
        });
    }
    lines
}

fn random_generator(rng: &mut ChaCha8Rng, node: usize, spec: &RandomSpec) -> Generator {
    let cap = rng.gen_range(20.0..80.0);
    Generator::new(node, cap, rng.gen_range(5.0..60.0), rng.gen_range(0.0..1.2))
        .with_quad(rng.gen_range(spec.quad_min..=spec.quad_max))
}

/// A seeded random network with strictly convex generator costs and its
/// demand. The first device is always a static generator.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> (Network, DemandSchedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=spec.max_nodes);
    let horizon = rng.gen_range(1..=spec.max_horizon);
    let k = rng.gen_range(1..=spec.max_devices);
    let mut net = Network::new(n, horizon);
    let n_lines = if n > 1 { rng.gen_range(n - 1..=2 * n) } else { 0 };
    net.lines = connected_lines(&mut rng, n, n_lines, |r| {
        if r.gen_bool(0.5) {
            Some(r.gen_range(10.0..60.0))
        } else {
            None
        }
    });
    for j in 0..k {
        let node = rng.gen_range(0..n);
        let roll: f64 = rng.gen();
        let device = if j > 0 && spec.allow_storage && horizon > 1 && roll < 0.2 {
            let capacity = rng.gen_range(10.0..50.0);
            // Ending where it started keeps stored energy from being free,
            // which would tie every storage unit at a zero price.
            Device::Storage(Storage {
                initial_soc: rng.gen_range(0.0..capacity / 2.0),
                terminal_soc: TerminalSoc::EqualToInitial,
                ..Storage::new(node, capacity, rng.gen_range(5.0..25.0), rng.gen_range(0.85..0.98))
            })
        } else if j > 0 && spec.allow_ramp && horizon > 1 && roll < 0.35 {
            Device::RampGenerator {
                generator: random_generator(&mut rng, node, spec),
                ramp: rng.gen_range(5.0..30.0),
            }
        } else {
            Device::StaticGenerator(random_generator(&mut rng, node, spec))
        };
        net.devices.push(device);
    }
    // Keep total demand under 80% of generating capacity so instances are
    // not dominated by curtailment, where every node ties at the same price.
    let capacity: f64 = net.devices.iter().filter_map(|d| d.generator()).map(|g| g.g_max.at(0)).sum();
    let values = (0..horizon)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..40.0)).collect();
            let total: f64 = row.iter().sum();
            let scale = if total > 0.8 * capacity { 0.8 * capacity / total } else { 1.0 };
            row.into_iter().map(|v| v * scale).collect()
        })
        .collect();
    let net = net.with_computed_ptdf().expect("generated lines are connected");
    (net, DemandSchedule::new(values).expect("finite demand"))
}

/// Daily load shape in [0.6, 1.0] peaking in the evening.
fn load_shape(t: usize, day_len: usize) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * ((t % day_len) as f64 - 18.0) / day_len as f64;
    0.8 + 0.2 * phase.cos()
}

/// Solar availability: zero at night, a half-sine during the day.
fn solar_shape(t: usize, day_len: usize) -> f64 {
    let h = (t % day_len) as f64 * 24.0 / day_len as f64;
    if (6.0..18.0).contains(&h) {
        (std::f64::consts::PI * (h - 6.0) / 12.0).sin()
    } else {
        0.0
    }
}

/// The timing instance: 60 nodes, 100 rated lines, 40 devices (30 static
/// generators, 5 ramp-limited, 5 storage units), 24 hourly periods.
pub fn scale_network(seed: u64) -> (Network, DemandSchedule) {
    let (n, m, horizon) = (60, 100, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(n, horizon);
    net.lines = connected_lines(&mut rng, n, m, |r| Some(r.gen_range(80.0..200.0)));
    for j in 0..40 {
        let node = rng.gen_range(0..n);
        let gen = Generator::new(node, rng.gen_range(60.0..200.0), rng.gen_range(10.0..60.0), rng.gen_range(0.0..1.1))
            .with_quad(rng.gen_range(1e-3..5e-2));
        net.devices.push(match j {
            0..=29 => Device::StaticGenerator(gen),
            30..=34 => Device::RampGenerator {
                ramp: rng.gen_range(20.0..60.0),
                generator: gen,
            },
            _ => Device::Storage(Storage::new(node, rng.gen_range(100.0..300.0), rng.gen_range(30.0..80.0), 0.92)),
        });
    }
    let base: Vec<f64> = (0..n).map(|_| rng.gen_range(20.0..70.0)).collect();
    let values = (0..horizon)
        .map(|t| base.iter().map(|b| b * load_shape(t, 24)).collect())
        .collect();
    let net = net.with_computed_ptdf().expect("generated lines are connected");
    (net, DemandSchedule::new(values).expect("finite demand"))
}

/// Three nodes in a ring over 24 hourly periods: coal at node 0, gas at
/// node 1, solar at node 2, and (when `with_storage`) a battery at nodes 1
/// and 2. Without storage the network has no dynamic devices.
pub fn storage_heavy(with_storage: bool) -> (Network, DemandSchedule) {
    let horizon = 24;
    let solar: Vec<f64> = (0..horizon).map(|t| 120.0 * solar_shape(t, 24)).collect();
    let mut net = Network::new(3, horizon)
        .with_line(Line::new(0, 1, 10.0, 60.0))
        .with_line(Line::new(1, 2, 10.0, 60.0))
        .with_line(Line::new(0, 2, 10.0, 60.0))
        .with_device(Device::StaticGenerator(
            Generator::new(0, 150.0, 20.0, 1.0).with_quad(0.02).named("coal"),
        ))
        .with_device(Device::StaticGenerator(
            Generator::new(1, 120.0, 35.0, 0.45).with_quad(0.05).named("gas"),
        ))
        .with_device(Device::StaticGenerator(Generator::new(2, solar, 0.5, 0.0).with_quad(1e-3).named("solar")));
    if with_storage {
        for (node, name) in [(1, "battery_1"), (2, "battery_2")] {
            net = net.with_device(Device::Storage(Storage {
                name: Some(name.into()),
                initial_soc: 200.0,
                terminal_soc: TerminalSoc::EqualToInitial,
                ..Storage::new(node, 400.0, 60.0, 0.95)
            }));
        }
    }
    net.description = Some(format!("three-node ring, 24 periods, storage: {with_storage}"));
    let values = (0..horizon)
        .map(|t| {
            let s = load_shape(t, 24);
            vec![40.0 * s, 70.0 * s, 50.0 * s]
        })
        .collect();
    let net = net.with_computed_ptdf().expect("ring is connected");
    (net, DemandSchedule::new(values).expect("finite demand"))
}
