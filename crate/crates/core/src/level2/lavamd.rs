//! Short-range N-body particle interactions over a 3-D box decomposition.
//!
//! Space is a cube of unit-edge boxes; particles only interact within a
//! cutoff radius no larger than the box edge, so scanning the home box plus
//! its (up to) 26 neighbors covers every interacting pair. The pair kernel is
//! an exponential potential with per-particle charge:
//!
//! ```text
//!   r2   = |pi - pj|^2            (skipped when r2 > cutoff^2 or i == j)
//!   v    = qj * exp(-A2 * r2)     potential contribution
//!   f    = 2 * A2 * v             displacement scale
//!   disp += f * (pi - pj)
//! ```

use crate::error::{Error, Result};
use crate::parallel::par_map_blocks;
use crate::rng::CounterRng;

/// Pair-kernel exponent (2 * alpha^2 with alpha = 0.5).
const A2: f64 = 0.5;

/// Particles binned into unit boxes on a cubic lattice.
#[derive(Debug, Clone)]
pub struct ParticleSpace {
    pub boxes_per_side: usize,
    pub particles_per_box: usize,
    /// xyz per particle, grouped by box: particle `p` of box `b` sits at
    /// index `(b * particles_per_box + p) * 3`.
    pub positions: Vec<f64>,
    pub charges: Vec<f64>,
    pub cutoff: f64,
}

impl ParticleSpace {
    pub fn random(
        boxes_per_side: usize,
        particles_per_box: usize,
        cutoff: f64,
        rng: &mut CounterRng,
    ) -> Result<ParticleSpace> {
        if !(cutoff > 0.0 && cutoff <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cutoff {cutoff} must be in (0, 1] (box edge is 1)"
            )));
        }
        let boxes = boxes_per_side * boxes_per_side * boxes_per_side;
        let n = boxes * particles_per_box;
        let mut positions = Vec::with_capacity(n * 3);
        let mut charges = Vec::with_capacity(n);
        for b in 0..boxes {
            let bz = b / (boxes_per_side * boxes_per_side);
            let by = (b / boxes_per_side) % boxes_per_side;
            let bx = b % boxes_per_side;
            for _ in 0..particles_per_box {
                positions.push(bx as f64 + rng.next_f64());
                positions.push(by as f64 + rng.next_f64());
                positions.push(bz as f64 + rng.next_f64());
                charges.push(0.1 + rng.next_f64());
            }
        }
        Ok(ParticleSpace {
            boxes_per_side,
            particles_per_box,
            positions,
            charges,
            cutoff,
        })
    }

    pub fn particle_count(&self) -> usize {
        self.charges.len()
    }

    #[inline]
    fn position(&self, i: usize) -> [f64; 3] {
        [
            self.positions[i * 3],
            self.positions[i * 3 + 1],
            self.positions[i * 3 + 2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interactions {
    pub potential: Vec<f64>,
    /// xyz displacement per particle.
    pub displacement: Vec<f64>,
    pub pairs_evaluated: u64,
}

#[inline]
fn accumulate(
    space: &ParticleSpace,
    i: usize,
    j: usize,
    cutoff2: f64,
    potential: &mut f64,
    disp: &mut [f64; 3],
) -> bool {
    let pi = space.position(i);
    let pj = space.position(j);
    let dx = pi[0] - pj[0];
    let dy = pi[1] - pj[1];
    let dz = pi[2] - pj[2];
    let r2 = dx * dx + dy * dy + dz * dz;
    if r2 > cutoff2 {
        return false;
    }
    let v = space.charges[j] * (-A2 * r2).exp();
    let f = 2.0 * A2 * v;
    *potential += v;
    disp[0] += f * dx;
    disp[1] += f * dy;
    disp[2] += f * dz;
    true
}

/// Neighbor-box traversal, parallel over home boxes. Per-particle sums run in
/// a fixed neighbor order, so results are worker-count independent.
pub fn lavamd(space: &ParticleSpace, workers: usize) -> Result<Interactions> {
    if !(space.cutoff > 0.0 && space.cutoff <= 1.0) {
        return Err(Error::InvalidInput("cutoff exceeds box edge".to_string()));
    }
    let side = space.boxes_per_side as i64;
    let ppb = space.particles_per_box;
    let boxes = (side * side * side) as usize;
    let n = space.particle_count();
    let cutoff2 = space.cutoff * space.cutoff;

    let mut potential = vec![0.0f64; n];
    let mut displacement = vec![0.0f64; n * 3];
    let pot_out = crate::parallel::SharedSlice::new(&mut potential);
    let disp_out = crate::parallel::SharedSlice::new(&mut displacement);
    let pair_counts = par_map_blocks(workers, boxes, 1, |_, range| {
        let mut pairs = 0u64;
        for home in range {
            let hz = home as i64 / (side * side);
            let hy = (home as i64 / side) % side;
            let hx = home as i64 % side;
            for p in 0..ppb {
                let i = home * ppb + p;
                let mut pot = 0.0f64;
                let mut disp = [0.0f64; 3];
                for dz in -1..=1i64 {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let (nx, ny, nz) = (hx + dx, hy + dy, hz + dz);
                            if nx < 0 || ny < 0 || nz < 0 || nx >= side || ny >= side || nz >= side
                            {
                                continue;
                            }
                            let nbox = ((nz * side + ny) * side + nx) as usize;
                            for q in 0..ppb {
                                let j = nbox * ppb + q;
                                if i == j {
                                    continue;
                                }
                                pairs += 1;
                                accumulate(space, i, j, cutoff2, &mut pot, &mut disp);
                            }
                        }
                    }
                }
                // Home boxes are distributed whole, so particle slots are
                // written by exactly one worker.
                unsafe {
                    pot_out.set(i, pot);
                    disp_out.set(i * 3, disp[0]);
                    disp_out.set(i * 3 + 1, disp[1]);
                    disp_out.set(i * 3 + 2, disp[2]);
                }
            }
        }
        pairs
    });
    Ok(Interactions {
        potential,
        displacement,
        pairs_evaluated: pair_counts.into_iter().sum(),
    })
}

/// Cutoff-restricted all-pairs oracle. `sample` limits which particles are
/// evaluated (all of them when `None`); unsampled slots stay zero.
pub fn lavamd_all_pairs(space: &ParticleSpace, sample: Option<&[usize]>) -> Interactions {
    let n = space.particle_count();
    let cutoff2 = space.cutoff * space.cutoff;
    let mut potential = vec![0.0f64; n];
    let mut displacement = vec![0.0f64; n * 3];
    let all: Vec<usize>;
    let targets: &[usize] = match sample {
        Some(s) => s,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    let mut pairs = 0u64;
    for &i in targets {
        let mut pot = 0.0f64;
        let mut disp = [0.0f64; 3];
        for j in 0..n {
            if i == j {
                continue;
            }
            pairs += 1;
            accumulate(space, i, j, cutoff2, &mut pot, &mut disp);
        }
        potential[i] = pot;
        displacement[i * 3] = disp[0];
        displacement[i * 3 + 1] = disp[1];
        displacement[i * 3 + 2] = disp[2];
    }
    Interactions {
        potential,
        displacement,
        pairs_evaluated: pairs,
    }
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    let denom = want.abs().max(1e-30);
    (got - want).abs() / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn particles_beyond_cutoff_do_not_interact() {
        let space = ParticleSpace {
            boxes_per_side: 1,
            particles_per_box: 2,
            positions: vec![0.05, 0.05, 0.05, 0.95, 0.95, 0.95],
            charges: vec![1.0, 1.0],
            cutoff: 0.3,
        };
        let out = lavamd(&space, 1).unwrap();
        assert!(out.potential.iter().all(|&v| v == 0.0));
        assert!(out.displacement.iter().all(|&v| v == 0.0));
        assert_eq!(out.pairs_evaluated, 2);
    }

    #[test]
    fn single_particle_sees_no_force() {
        let space = ParticleSpace {
            boxes_per_side: 1,
            particles_per_box: 1,
            positions: vec![0.5, 0.5, 0.5],
            charges: vec![2.0],
            cutoff: 1.0,
        };
        let out = lavamd(&space, 2).unwrap();
        assert_eq!(out.potential, vec![0.0]);
        assert_eq!(out.displacement, vec![0.0, 0.0, 0.0]);
        assert_eq!(out.pairs_evaluated, 0);
    }

    #[test]
    fn neighbor_boxes_match_all_pairs_oracle() {
        let mut rng = CounterRng::new(9, "lavamd-test");
        let space = ParticleSpace::random(3, 16, 1.0, &mut rng).unwrap();
        let fast = lavamd(&space, 3).unwrap();
        let oracle = lavamd_all_pairs(&space, None);
        for i in 0..space.particle_count() {
            assert!(
                relative_error(fast.potential[i], oracle.potential[i]) < 1e-10,
                "potential {i}: {} vs {}",
                fast.potential[i],
                oracle.potential[i]
            );
            for c in 0..3 {
                assert!(
                    relative_error(fast.displacement[i * 3 + c], oracle.displacement[i * 3 + c])
                        < 1e-10
                );
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let mut rng = CounterRng::new(10, "lavamd-test");
        let space = ParticleSpace::random(2, 8, 0.9, &mut rng).unwrap();
        let one = lavamd(&space, 1).unwrap();
        let four = lavamd(&space, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn oversize_cutoff_is_rejected() {
        let mut rng = CounterRng::new(11, "lavamd-test");
        assert!(ParticleSpace::random(2, 4, 1.5, &mut rng).is_err());
    }
}
