//! Stretched radial grids for the inner disk and the outer annulus.
//!
//! Nodes come from a uniform parameter `xi` through a cubic map whose local
//! spacing at the reference circle is three times finer than at the far end.

/// Which side of the reference circle a grid covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// `0 <= rho <= R`, node 0 at the pole, last node on the circle.
    Inner,
    /// `R <= rho <= R_outer`, node 0 on the circle, last node at the wall.
    Outer,
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub phase: Phase,
    /// Node radii, `n + 1` entries.
    pub nodes: Vec<f64>,
    /// Face radii halfway between nodes, `n` entries.
    pub faces: Vec<f64>,
    /// Node spacing `nodes[i + 1] - nodes[i]`.
    pub spacing: Vec<f64>,
    /// Control-volume width around each node (half cells at the ends).
    pub vol: Vec<f64>,
}

/// Stretching ratio between coarsest and finest spacing.
pub const STRETCH: f64 = 3.0;

// Integral of 1 + (STRETCH - 1) t^2 from 0 to t, normalized to 1 at t = 1.
fn cubic(t: f64) -> f64 {
    let c = STRETCH - 1.0;
    (t + c * t * t * t / 3.0) / (1.0 + c / 3.0)
}

impl RadialGrid {
    pub fn new(phase: Phase, r: f64, r_outer: f64, n: usize) -> Self {
        assert!(n >= 4, "radial grid needs at least 4 intervals");
        let nodes: Vec<f64> = (0..=n)
            .map(|i| {
                let xi = i as f64 / n as f64;
                match phase {
                    Phase::Inner => r * (1.0 - cubic(1.0 - xi)),
                    Phase::Outer => r + (r_outer - r) * cubic(xi),
                }
            })
            .collect();
        Self::from_nodes(phase, nodes)
    }

    fn from_nodes(phase: Phase, mut nodes: Vec<f64>) -> Self {
        let n = nodes.len() - 1;
        // Pin the end points exactly.
        match phase {
            Phase::Inner => nodes[0] = 0.0,
            Phase::Outer => {}
        }
        let spacing: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let faces: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut vol = vec![0.0; n + 1];
        vol[0] = faces[0] - nodes[0];
        for i in 1..n {
            vol[i] = faces[i] - faces[i - 1];
        }
        vol[n] = nodes[n] - faces[n - 1];
        Self { phase, nodes, faces, spacing, vol }
    }

    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Index of the node on the reference circle.
    pub fn interface_node(&self) -> usize {
        match self.phase {
            Phase::Inner => self.n(),
            Phase::Outer => 0,
        }
    }

    /// Second-order first-derivative weights at node `i` over nodes
    /// `(i0, i0 + 1, i0 + 2)`, central in the interior, one-sided at the ends.
    pub fn d1_weights(&self, i: usize) -> (usize, [f64; 3]) {
        let n = self.n();
        let x = &self.nodes;
        let i0 = if i == 0 { 0 } else if i == n { n - 2 } else { i - 1 };
        let (x0, x1, x2) = (x[i0] - x[i], x[i0 + 1] - x[i], x[i0 + 2] - x[i]);
        // Lagrange basis derivatives at 0.
        let w0 = (x1 + x2) / ((x0 - x1) * (x0 - x2)) * -1.0;
        let w1 = (x0 + x2) / ((x1 - x0) * (x1 - x2)) * -1.0;
        let w2 = (x0 + x1) / ((x2 - x0) * (x2 - x1)) * -1.0;
        (i0, [w0, w1, w2])
    }
}
