//! Method identifiers and the iterate record shared by every runner.

use crate::error::{Error, Result};
use crate::vecops::norm_sq;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gd,
    Fgm,
    Ogm,
    OgmG,
    OrcFFlat,
    OblFFlat,
    OblGFlat,
    Custom,
    OrcF,
    FgmRc,
    FgmRcSharp,
    OblF,
    OblG,
    FgmBl,
}

impl Method {
    pub const ALL: [Method; 14] = [
        Method::Gd,
        Method::Fgm,
        Method::Ogm,
        Method::OgmG,
        Method::OrcFFlat,
        Method::OblFFlat,
        Method::OblGFlat,
        Method::Custom,
        Method::OrcF,
        Method::FgmRc,
        Method::FgmRcSharp,
        Method::OblF,
        Method::OblG,
        Method::FgmBl,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Fgm => "fgm",
            Method::Ogm => "ogm",
            Method::OgmG => "ogm-g",
            Method::OrcFFlat => "orc-f-flat",
            Method::OblFFlat => "obl-f-flat",
            Method::OblGFlat => "obl-g-flat",
            Method::Custom => "custom",
            Method::OrcF => "orc-f",
            Method::FgmRc => "fgm-rc",
            Method::FgmRcSharp => "fgm-rc-sharp",
            Method::OblF => "obl-f",
            Method::OblG => "obl-g",
            Method::FgmBl => "fgm-bl",
        }
    }

    pub fn from_id(id: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn is_fixed_step(self) -> bool {
        matches!(
            self,
            Method::Gd
                | Method::Fgm
                | Method::Ogm
                | Method::OgmG
                | Method::OrcFFlat
                | Method::OblFFlat
                | Method::OblGFlat
                | Method::Custom
        )
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Method::OrcF | Method::FgmRc | Method::FgmRcSharp)
    }

    pub fn is_line_search(self) -> bool {
        matches!(self, Method::OblF | Method::OblG | Method::FgmBl)
    }

    /// Smallest supported horizon.
    pub fn min_horizon(self) -> usize {
        match self {
            Method::OblGFlat | Method::OblG => 3,
            _ => 1,
        }
    }

    /// Whether the guarantee is stated on the secondary sequence y.
    pub fn reports_y(self) -> bool {
        matches!(
            self,
            Method::Fgm
                | Method::OrcFFlat
                | Method::OrcF
                | Method::FgmRc
                | Method::FgmRcSharp
                | Method::FgmBl
                | Method::OblFFlat
                | Method::OblF
        )
    }

    pub fn description(self) -> &'static str {
        match self {
            Method::Gd => "gradient descent with step 1/L",
            Method::Fgm => "Nesterov's fast gradient method",
            Method::Ogm => "optimized gradient method with last-step modification",
            Method::OgmG => "optimized gradient method for gradient norm",
            Method::OrcFFlat => "optimized randomized-coordinate method, full-gradient form",
            Method::OblFFlat => "optimized backtracking method (function value), fixed-step form",
            Method::OblGFlat => "optimized backtracking method (gradient norm), fixed-step form",
            Method::Custom => "user-supplied step-size matrix",
            Method::OrcF => "optimized randomized coordinate updates",
            Method::FgmRc => "fast gradient method with randomized coordinate updates",
            Method::FgmRcSharp => "FGM-RC with theta coefficients",
            Method::OblF => "optimized backtracking line search, function value",
            Method::OblG => "optimized backtracking line search, gradient norm",
            Method::FgmBl => "fast gradient method with backtracking line search",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Jump-correction terms recorded at an iteration where Lₖ increased.
#[derive(Debug, Clone, Serialize)]
pub struct JumpTerm {
    pub k: usize,
    pub l_before: f64,
    pub l_after: f64,
    /// Term built from ‖∇f(xₖ)‖²; this is the one the telescoped sum needs.
    pub current_grad_term: f64,
    /// Same weight applied to ‖∇f(xₖ₊₁)‖², reported for comparison.
    pub next_grad_term: f64,
}

/// Iterates x, y, z with values, gradients and run metadata. All vectors are
/// indexed by k = 0..=N; y₀ = z₀ = x₀.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub method: Method,
    pub oracle_id: String,
    pub seed: Option<u64>,
    pub n: usize,
    /// Modulus used by fixed-step runs (the oracle's L).
    pub l: f64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub gx: Vec<Vec<f64>>,
    /// Smoothness estimates L₀..L_N (constant for fixed-step runs).
    pub lk: Vec<f64>,
    /// Coordinate drawn at step k (randomized runs).
    pub coords: Vec<usize>,
    /// Iterations k at which L_{k+1} > L_k.
    pub jumps: Vec<usize>,
    pub backtracks: usize,
    /// S = Σ √Lᵢ for coordinate runs.
    pub s: Option<f64>,
    pub jump_terms: Vec<JumpTerm>,
}

impl Trajectory {
    pub(crate) fn empty(method: Method, oracle_id: &str, n: usize, l: f64) -> Self {
        Self {
            method,
            oracle_id: oracle_id.to_string(),
            seed: None,
            n,
            l,
            x: Vec::with_capacity(n + 1),
            y: Vec::with_capacity(n + 1),
            z: Vec::with_capacity(n + 1),
            fx: Vec::with_capacity(n + 1),
            fy: Vec::with_capacity(n + 1),
            gx: Vec::with_capacity(n + 1),
            lk: Vec::with_capacity(n + 1),
            coords: Vec::new(),
            jumps: Vec::new(),
            backtracks: 0,
            s: None,
            jump_terms: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn grad_norm_sq(&self, k: usize) -> f64 {
        norm_sq(&self.gx[k])
    }

    pub fn jump_flag(&self, k: usize) -> bool {
        k > 0 && self.lk[k] > self.lk[k - 1]
    }

    /// Value of the iterate the method's guarantee is stated on.
    pub fn output_value(&self, k: usize) -> f64 {
        if self.method.reports_y() {
            self.fy[k]
        } else {
            self.fx[k]
        }
    }

    /// CSV with columns k, f_gap, grad_norm_sq, Lk, jump_flag, bound, slack.
    /// `bounds[k]` is the guarantee at row k when one applies; slack is
    /// bound − observed on the same quantity the bound controls.
    pub fn to_csv(&self, f_star: f64, bounds: &[Option<(f64, f64)>]) -> String {
        let mut out = String::from("k,f_gap,grad_norm_sq,Lk,jump_flag,bound,slack\n");
        for k in 0..self.len() {
            let _ = write!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{}",
                k,
                self.output_value(k) - f_star,
                self.grad_norm_sq(k),
                self.lk[k],
                u8::from(self.jump_flag(k))
            );
            match bounds.get(k).copied().flatten() {
                Some((observed, bound)) => {
                    let _ = writeln!(out, ",{:.16e},{:.16e}", bound, bound - observed);
                }
                None => out.push_str(",,\n"),
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }
}
