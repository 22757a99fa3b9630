//! Seeded synthetic bundles for demos, tests and sweeps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bundle::{Bundle, BundleError, Demonstration, DemonstrationPool, ProjectionBundle, TestItem};
use crate::rng::seeded;

const TOPICS: [&str; 12] = [
    "triangle", "circle", "prime", "fraction", "polynomial", "probability", "sequence", "integer", "square",
    "angle", "remainder", "matrix",
];
const VERBS: [&str; 6] = ["compute", "find", "evaluate", "simplify", "determine", "solve"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub d_prime: usize,
    pub seed: u64,
}

fn problem<R: Rng>(rng: &mut R) -> String {
    let verb = VERBS[rng.random_range(0..VERBS.len())];
    let a = TOPICS[rng.random_range(0..TOPICS.len())];
    let b = TOPICS[rng.random_range(0..TOPICS.len())];
    let x: u32 = rng.random_range(1..100);
    let y: u32 = rng.random_range(1..100);
    format!("{verb} the {a} value of {x} and {y} for the {b}")
}

fn gauss_vec<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Projections are `w_kq = I + G/(2√d)` and `w_v = G'/√d`; embeddings are
/// standard normal. Demonstrations are `demo-0000…`, tests `test-0000…`.
pub fn synthetic_bundle(spec: &SynthSpec) -> Result<Bundle, BundleError> {
    let mut rng = seeded(spec.seed, 0);
    let (d, dp) = (spec.d, spec.d_prime);
    let scale = 1.0 / (d.max(1) as f64).sqrt();
    let w_kq = DMatrix::identity(d, d) + DMatrix::from_fn(d, d, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        0.5 * scale * g
    });
    let w_v = DMatrix::from_fn(dp, d, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        scale * g
    });
    let projection = ProjectionBundle::new(w_kq, w_v, format!("synthetic seed={}", spec.seed))?;

    let items = (0..spec.m)
        .map(|i| {
            let p = problem(&mut rng);
            let x: u32 = rng.random_range(0..1000);
            Demonstration {
                id: format!("demo-{i:04}"),
                problem: p,
                solution: format!("The answer is {x}."),
                embedding: gauss_vec(d, &mut rng),
            }
        })
        .collect();
    let pool = DemonstrationPool::new(d, items)?;
    let tests = (0..spec.n)
        .map(|i| TestItem {
            id: format!("test-{i:04}"),
            problem: problem(&mut rng),
            embedding: gauss_vec(d, &mut rng),
        })
        .collect();
    Bundle::new(projection, pool, tests)
}
