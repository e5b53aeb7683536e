use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wge_core::quaternion::{Quaternion, QuaternionMatrix, QuaternionVector};

use crate::{check, within, Status};

const CASES: usize = 10_000;
const NORM_TOL: f64 = 1e-9;
const MATVEC_TOL: f64 = 1e-12;

fn random_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    )
}

/// Textbook product with `i² = j² = k² = ijk = -1`.
fn product(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [a1, b1, c1, d1] = a;
    let [a2, b2, c2, d2] = b;
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst relative errors over the randomized cases.
#[derive(Default)]
struct Worst {
    product: f64,
    norm: f64,
    matvec: f64,
    conjugate: f64,
    commutator: f64,
    noncommuting: usize,
}

pub fn criterion() -> Status {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut w = Worst::default();
    for _ in 0..CASES {
        let (q, p) = (random_quaternion(&mut rng), random_quaternion(&mut rng));
        let qp = q.hamilton(p);
        let expected = q.norm() * p.norm();
        w.product = w.product.max(max_abs_diff(&qp.to_array(), &product(q.to_array(), p.to_array())) / expected);
        w.norm = w.norm.max((qp.norm() - expected).abs() / expected);

        let qq = q.hamilton(q.conjugate()).to_array();
        let n2 = q.norm_squared();
        w.conjugate = w.conjugate.max(qq[1..].iter().map(|x| x.abs()).fold((qq[0] - n2).abs(), f64::max) / n2);

        // q⊗p - p⊗q = 2 (v_q × v_p) for the vector parts.
        let pq = p.hamilton(q).to_array();
        let diff: Vec<f64> = qp.to_array().iter().zip(pq).map(|(a, b)| a - b).collect();
        let (u, v) = ([q.i, q.j, q.k], [p.i, p.j, p.k]);
        let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let twice = [0.0, 2.0 * cross[0], 2.0 * cross[1], 2.0 * cross[2]];
        w.commutator = w.commutator.max(max_abs_diff(&diff, &twice) / expected);
        if diff.iter().any(|&d| d.abs() > 1e-9 * expected) {
            w.noncommuting += 1;
        }

        let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let weights = QuaternionMatrix::from_fn(m, n, |_, _| random_quaternion(&mut rng));
        let xs: Vec<Quaternion> = (0..n).map(|_| random_quaternion(&mut rng)).collect();
        let x = QuaternionVector::from_quaternions(&xs).unwrap();
        let fast = weights.matvec_hamilton(&x).unwrap().to_blocks();
        let block = weights.to_real_block();
        let blocks = x.to_blocks();
        let real: Vec<f64> =
            (0..4 * m).map(|row| (0..4 * n).map(|c| block[row * 4 * n + c] * blocks[c]).sum()).collect();
        let summed: Vec<Quaternion> = (0..m)
            .map(|a| {
                let acc = (0..n).fold([0.0; 4], |acc, b| {
                    let t = product(weights.get(a, b).to_array(), xs[b].to_array());
                    [acc[0] + t[0], acc[1] + t[1], acc[2] + t[2], acc[3] + t[3]]
                });
                Quaternion::new(acc[0], acc[1], acc[2], acc[3])
            })
            .collect();
        let summed = QuaternionVector::from_quaternions(&summed).unwrap().to_blocks();
        let scale = fast.iter().map(|v| v.abs()).fold(1.0, f64::max);
        w.matvec = w.matvec.max(max_abs_diff(&fast, &real).max(max_abs_diff(&fast, &summed)) / scale);
    }
    let witness = Quaternion::I.hamilton(Quaternion::J) == Quaternion::K
        && Quaternion::J.hamilton(Quaternion::I) == Quaternion::new(0.0, 0.0, 0.0, -1.0);
    let ok = w.product < MATVEC_TOL
        && w.norm < NORM_TOL
        && w.matvec < MATVEC_TOL
        && w.conjugate < MATVEC_TOL
        && w.commutator < NORM_TOL
        && witness
        && w.noncommuting > CASES * 9 / 10;
    let detail = format!(
        "{CASES} cases; product vs textbook {:.1e}, norm rel err {:.1e} (<{NORM_TOL:e}), matvec vs block/textbook {:.1e} (<{MATVEC_TOL:e}), \
         q*conj(q) imaginary {:.1e}, ij=k and ji=-k {witness}, {} non-commuting pairs, commutator identity {:.1e}",
        w.product, w.norm, w.matvec, w.conjugate, w.noncommuting, w.commutator
    );
    within(check(ok, detail), started.elapsed(), Duration::from_secs(10))
}
