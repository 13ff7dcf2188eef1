//! Randomized properties of the two-port algebra: S↔ABCD conversion must
//! round-trip, and cascading must associate, on arbitrary passive ladders.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sawfilt_core::{
    abcd_of_series_admittance, abcd_of_shunt_admittance, abcd_to_s, cascade, make_grid, s_to_abcd,
    AbcdResponse, FrequencyGrid, GridSpacing, OnePortResponse,
};

/// A random series-RLC admittance; the resistor keeps it strictly passive
/// and bounded away from zero and infinity at every frequency.
fn random_rlc_admittance(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> Complex64 {
    let r = rng.random_range(0.5..80.0);
    let l = rng.random_range(1e-10..5e-8);
    let c = rng.random_range(5e-14..5e-12);
    move |omega: f64| {
        let x = omega * l - 1.0 / (omega * c);
        1.0 / Complex64::new(r, x)
    }
}

/// A random passive two-port: 2–6 alternating-at-random series/shunt RLC
/// embeddings cascaded over `grid`.
fn random_passive_two_port(rng: &mut ChaCha8Rng, grid: &FrequencyGrid) -> AbcdResponse {
    let n_stages = rng.random_range(2..=6);
    let mut chain: Option<AbcdResponse> = None;
    for _ in 0..n_stages {
        let y = random_rlc_admittance(rng);
        let ys: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&f| y(std::f64::consts::TAU * f))
            .collect();
        let resp = OnePortResponse::new(grid.clone(), ys, 50.0).unwrap();
        let stage = if rng.random_range(0..2) == 0 {
            abcd_of_series_admittance(&resp).unwrap()
        } else {
            abcd_of_shunt_admittance(&resp).unwrap()
        };
        chain = Some(match chain {
            None => stage,
            Some(c) => cascade(&c, &stage).unwrap(),
        });
    }
    chain.unwrap()
}

fn grid() -> FrequencyGrid {
    make_grid(3.9e9, 4.7e9, 41, GridSpacing::Linear).unwrap()
}

#[test]
fn s_abcd_round_trip_on_random_passive_networks() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let a = random_passive_two_port(&mut rng, &g);
        let s = abcd_to_s(&a, 50.0).unwrap();
        let a2 = s_to_abcd(&s).unwrap();
        let s2 = abcd_to_s(&a2, 50.0).unwrap();
        // S entries are O(1) for passive networks, so the error is measured
        // per entry against max(1, |entry|)
        for (p, q) in s.samples().iter().zip(s2.samples()) {
            for (x, y) in [
                (p.s11, q.s11),
                (p.s12, q.s12),
                (p.s21, q.s21),
                (p.s22, q.s22),
            ] {
                worst = worst.max((x - y).norm() / x.norm().max(1.0));
            }
        }
        // and ABCD entries against the largest entry of the original matrix
        for (m, n) in a.matrices().iter().zip(a2.matrices()) {
            let scale = m.a.norm().max(m.b.norm()).max(m.c.norm()).max(m.d.norm());
            for (x, y) in [(m.a, n.a), (m.b, n.b), (m.c, n.c), (m.d, n.d)] {
                worst = worst.max((x - y).norm() / scale);
            }
        }
    }
    assert!(worst < 1e-12, "round-trip error {worst:.3e}");
}

#[test]
fn cascade_is_associative() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let a = random_passive_two_port(&mut rng, &g);
        let b = random_passive_two_port(&mut rng, &g);
        let c = random_passive_two_port(&mut rng, &g);
        let left = cascade(&cascade(&a, &b).unwrap(), &c).unwrap();
        let right = cascade(&a, &cascade(&b, &c).unwrap()).unwrap();
        for (m, n) in left.matrices().iter().zip(right.matrices()) {
            let scale = m.a.norm().max(m.b.norm()).max(m.c.norm()).max(m.d.norm());
            for (x, y) in [(m.a, n.a), (m.b, n.b), (m.c, n.c), (m.d, n.d)] {
                worst = worst.max((x - y).norm() / scale);
            }
        }
    }
    assert!(worst < 1e-12, "associativity error {worst:.3e}");
}

#[test]
fn reciprocity_of_random_passive_networks() {
    // RLC ladders are reciprocal: det(ABCD) = 1, hence S21 = S12
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let a = random_passive_two_port(&mut rng, &g);
        let s = abcd_to_s(&a, 37.0).unwrap();
        for p in s.samples() {
            assert!((p.s21 - p.s12).norm() < 1e-12);
        }
    }
}
