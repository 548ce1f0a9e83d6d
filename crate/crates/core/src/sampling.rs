//! Seeded random instances.
//!
//! Every instance gets its own ChaCha8 stream. Its seed is derived from the
//! run seed and the instance coordinates with SplitMix64, so instances can be
//! generated in any order and still match.

use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::FieldElement;
use crate::geometry::FormSpace;
use crate::incidence::{PointSet, SphereKey, SphereSet};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` one SplitMix64 step at a time.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Points and centers drawn from the whole space.
    Uniform,
    /// Points and centers drawn from a random coordinate subspace.
    Clustered,
}

/// `n` distinct points, uniformly without replacement.
pub fn sample_points(rng: &mut ChaCha8Rng, space: &FormSpace, n: usize) -> PointSet {
    let size = space.space().size() as usize;
    let ids = index::sample(rng, size, n.min(size))
        .into_iter()
        .map(|i| i as u32)
        .collect();
    PointSet::new(space.space(), ids).expect("sampled points are distinct")
}

/// `m` distinct spheres with centers in `centers` and radii in `radii`.
pub fn sample_spheres(
    rng: &mut ChaCha8Rng,
    space: &Arc<FormSpace>,
    centers: &[u32],
    radii: &[FieldElement],
    m: usize,
) -> SphereSet {
    let total = centers.len() * radii.len();
    let keys = index::sample(rng, total, m.min(total))
        .into_iter()
        .map(|k| SphereKey::new(centers[k / radii.len()], radii[k % radii.len()]))
        .collect();
    SphereSet::new(space.clone(), keys).expect("sampled spheres are distinct")
}

/// A random instance with up to `max_points` points and `max_spheres`
/// spheres whose radii lie in `radii`. Both sets are non-empty.
pub fn sample_instance(
    rng: &mut ChaCha8Rng,
    space: &Arc<FormSpace>,
    radii: &[FieldElement],
    layout: Layout,
    max_points: usize,
    max_spheres: usize,
) -> (PointSet, SphereSet) {
    assert!(!radii.is_empty(), "no admissible radius");
    let ps = space.space();
    let universe: Vec<u32> = match layout {
        Layout::Uniform => (0..ps.size()).collect(),
        Layout::Clustered => {
            let d = space.dim();
            let k = rng.gen_range(1..=d.saturating_sub(1).max(1));
            let free = index::sample(rng, d, k).into_vec();
            (0..ps.size())
                .filter(|&x| {
                    ps.decode(x)
                        .iter()
                        .enumerate()
                        .all(|(i, c)| c.is_zero() || free.contains(&i))
                })
                .collect()
        }
    };
    let n = rng.gen_range(1..=universe.len().min(max_points));
    let ids = index::sample(rng, universe.len(), n)
        .into_iter()
        .map(|i| universe[i])
        .collect();
    let points = PointSet::new(ps, ids).expect("sampled points are distinct");
    let m = rng.gen_range(1..=(universe.len() * radii.len()).min(max_spheres));
    let spheres = sample_spheres(rng, space, &universe, radii, m);
    (points, spheres)
}
