//! Synthetic initial data for flow runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{norm, NodalField};
use crate::mesh::TriMesh;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// Last coordinate axis everywhere.
    Constant,
    /// Planar degree-one vortex about the domain center,
    /// `(x - c) / sqrt(|x - c|^2 + core^2)`, with zero remaining components.
    SmoothedVortex { core: f64 },
    /// Independent uniformly distributed unit vectors per node.
    RandomUnit { seed: u64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Constant => "constant",
            Preset::SmoothedVortex { .. } => "smoothed-vortex",
            Preset::RandomUnit { .. } => "random-unit",
        }
    }

    pub fn build(&self, mesh: &TriMesh, n_components: usize) -> Result<NodalField> {
        if n_components < 2 {
            return Err(Error::UnsupportedDimension(n_components));
        }
        let (lo, hi) = bounding_box(mesh);
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        Ok(match *self {
            Preset::Constant => {
                let mut c = vec![0.0; n_components];
                c[n_components - 1] = 1.0;
                NodalField::constant(mesh.n_nodes(), &c)
            }
            Preset::SmoothedVortex { core } => {
                NodalField::from_fn(mesh, n_components, |x, y, v| {
                    let (dx, dy) = (x - center[0], y - center[1]);
                    let r = (dx * dx + dy * dy + core * core).sqrt();
                    if r > 0.0 {
                        v[0] = dx / r;
                        v[1] = dy / r;
                    }
                })
            }
            Preset::RandomUnit { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut f = NodalField::zeros(mesh.n_nodes(), n_components);
                for i in 0..mesh.n_nodes() {
                    let node = f.node_mut(i);
                    loop {
                        for x in node.iter_mut() {
                            *x = StandardNormal.sample(&mut rng);
                        }
                        let r = norm(node);
                        if r > 1e-8 {
                            node.iter_mut().for_each(|x| *x /= r);
                            break;
                        }
                    }
                }
                f
            }
        })
    }
}

fn bounding_box(mesh: &TriMesh) -> ([f64; 2], [f64; 2]) {
    mesh.nodes().iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1])],
                [hi[0].max(p[0]), hi[1].max(p[1])],
            )
        },
    )
}
