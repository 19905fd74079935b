#![allow(dead_code)]

use rand::Rng;
use timeblur::geo::{LocalPlane, Location, PlanarPoint};
use timeblur::model::{Fix, Trace, UserId};
use timeblur::rng;

/// Random walk with sharp turns, uneven steps and irregular sampling,
/// anywhere between 60°S and 60°N.
pub fn jagged_trace(seed: u64, index: u64) -> Trace {
    let mut r = rng::indexed_substream(seed, "test/jagged", index);
    let origin = Location::new(r.gen_range(-60.0..60.0), r.gen_range(-180.0..180.0)).unwrap();
    let plane = LocalPlane::new(origin);
    let n = r.gen_range(2..150);
    let mut p = PlanarPoint::ORIGIN;
    let mut t: i64 = r.gen_range(0..2_000_000_000);
    let mut heading: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    let mut fixes = Vec::with_capacity(n);
    for _ in 0..n {
        fixes.push(Fix::new(plane.unproject(&p), t));
        heading += r.gen_range(-2.5..2.5);
        let step = if r.gen_bool(0.2) { r.gen_range(0.0..10.0) } else { r.gen_range(10.0..600.0) };
        p = PlanarPoint::new(p.x + step * heading.cos(), p.y + step * heading.sin());
        t += r.gen_range(1..300);
    }
    Trace::new(UserId::new(format!("j{index:04}")).unwrap(), fixes).unwrap()
}
