use std::path::Path;

use serde::{Deserialize, Serialize};

use super::quadrature::{build_quadrature, AngularQuadrature};
use crate::error::{NteError, Result};

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(NteError::Validation(msg.into()))
}

/// Uniform vertex grid. Axis data is stored in `(x, y, z)` order; the first
/// `dims` entries are meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub dims: usize,
    /// Vertex count per axis, `(M+1, J+1, K+1)`.
    pub nodes: [usize; 3],
    pub extents: [(f64, f64); 3],
}

impl SpatialGrid {
    pub fn slab(width: f64, nodes: usize) -> Result<Self> {
        let g = SpatialGrid {
            dims: 1,
            nodes: [nodes, 1, 1],
            extents: [(0.0, width), (0.0, 0.0), (0.0, 0.0)],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn cube(side: f64, nodes: usize) -> Result<Self> {
        let g = SpatialGrid {
            dims: 3,
            nodes: [nodes; 3],
            extents: [(0.0, side); 3],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims != 1 && self.dims != 3 {
            return invalid(format!("grid dimensionality {} must be 1 or 3", self.dims));
        }
        for a in 0..self.dims {
            let (lo, hi) = self.extents[a];
            if self.nodes[a] < 2 {
                return invalid(format!("axis {a} needs at least 2 nodes"));
            }
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return invalid(format!("axis {a} extent ({lo}, {hi}) is empty"));
            }
        }
        Ok(())
    }

    /// Cell width along axis `a` (0 = x).
    pub fn step(&self, a: usize) -> f64 {
        let (lo, hi) = self.extents[a];
        (hi - lo) / (self.nodes[a] - 1) as f64
    }

    /// Vertex counts in storage order: `[x]` in 1D, `[z, y, x]` in 3D.
    pub fn spatial_shape(&self) -> Vec<usize> {
        (0..self.dims).rev().map(|a| self.nodes[a]).collect()
    }

    /// Cell counts in storage order.
    pub fn cell_shape(&self) -> Vec<usize> {
        self.spatial_shape().iter().map(|n| n - 1).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.spatial_shape().iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_shape().iter().product()
    }

    pub fn check_power_of_two(&self) -> Result<()> {
        for a in 0..self.dims {
            let n = self.nodes[a];
            if !n.is_power_of_two() {
                return invalid(format!(
                    "node count must be a power of two for QTT (axis {a} has {n} nodes)"
                ));
            }
        }
        Ok(())
    }
}

/// Multigroup cross sections of one material.
///
/// `sigma_s[g][g']` is the transfer from group `g'` into group `g`. Fission
/// neutrons born from group `g'` at rate `nu_sigma_f[g']` appear in group `g`
/// with probability `chi[g]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    #[serde(default)]
    pub name: String,
    pub sigma_t: Vec<f64>,
    pub sigma_s: Vec<Vec<f64>>,
    pub nu_sigma_f: Vec<f64>,
    pub chi: Vec<f64>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
}

impl CrossSections {
    pub fn groups(&self) -> usize {
        self.sigma_t.len()
    }

    /// One-group material from the usual benchmark quantities.
    pub fn one_group(sigma_t: f64, sigma_s: f64, nu: f64, sigma_f: f64) -> Self {
        CrossSections {
            name: String::new(),
            sigma_t: vec![sigma_t],
            sigma_s: vec![vec![sigma_s]],
            nu_sigma_f: vec![nu * sigma_f],
            chi: vec![1.0],
            velocity: Some(vec![1.0]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.groups();
        if g == 0 {
            return invalid("material has no energy groups");
        }
        if self.sigma_s.len() != g || self.sigma_s.iter().any(|r| r.len() != g) {
            return invalid(format!("sigma_s must be {g}x{g}"));
        }
        if self.nu_sigma_f.len() != g || self.chi.len() != g {
            return invalid(format!("nu_sigma_f and chi must have {g} entries"));
        }
        let all = self
            .sigma_t
            .iter()
            .chain(self.sigma_s.iter().flatten())
            .chain(&self.nu_sigma_f)
            .chain(&self.chi);
        for &v in all {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("cross sections must be finite and nonnegative, found {v}"));
            }
        }
        if self.nu_sigma_f.iter().any(|&v| v > 0.0) {
            let s: f64 = self.chi.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return invalid(format!("chi must sum to 1, sums to {s}"));
            }
        }
        if let Some(v) = &self.velocity {
            if v.len() != g || v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return invalid(format!("velocity needs {g} positive entries"));
            }
        }
        Ok(())
    }

    /// Infinite-medium multiplication factor of a one-group material.
    pub fn k_infinity(&self) -> Option<f64> {
        (self.groups() == 1).then(|| self.nu_sigma_f[0] / (self.sigma_t[0] - self.sigma_s[0][0]))
    }
}

/// Geometry, quadrature and materials of one eigenvalue problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportProblem {
    pub name: String,
    pub grid: SpatialGrid,
    pub quadrature: AngularQuadrature,
    pub materials: Vec<CrossSections>,
    /// Material index of every cell, row-major over [`SpatialGrid::cell_shape`].
    pub cell_material: Vec<usize>,
}

impl TransportProblem {
    /// Single-material problem.
    pub fn homogeneous(name: &str, grid: SpatialGrid, n: usize, xs: CrossSections) -> Result<Self> {
        let quadrature = build_quadrature(n, grid.dims)?;
        let cells = grid.num_cells();
        let p = TransportProblem {
            name: name.to_string(),
            grid,
            quadrature,
            materials: vec![xs],
            cell_material: vec![0; cells],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.quadrature.dims != self.grid.dims {
            return invalid("quadrature and grid dimensionality differ");
        }
        let first = self
            .materials
            .first()
            .ok_or_else(|| NteError::Validation("problem has no materials".into()))?;
        for m in &self.materials {
            m.validate()?;
            if m.groups() != first.groups() {
                return invalid("all materials must have the same group count");
            }
        }
        if self.cell_material.len() != self.grid.num_cells() {
            return invalid("cell material map does not match the grid");
        }
        if let Some(&bad) = self.cell_material.iter().find(|&&m| m >= self.materials.len()) {
            return invalid(format!("cell refers to missing material {bad}"));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.materials[0].groups()
    }

    pub fn ordinates(&self) -> usize {
        self.quadrature.len()
    }

    /// Full-grid mode sizes `(G, L, spatial...)`.
    pub fn mode_sizes(&self) -> Vec<usize> {
        let mut m = vec![self.groups(), self.ordinates()];
        m.extend(self.grid.spatial_shape());
        m
    }

    pub fn num_unknowns(&self) -> usize {
        self.mode_sizes().iter().product()
    }

    /// Index of the material used everywhere, if the problem is homogeneous.
    pub fn uniform_material(&self) -> Option<usize> {
        let m = *self.cell_material.first()?;
        self.cell_material.iter().all(|&c| c == m).then_some(m)
    }

    pub fn has_velocities(&self) -> bool {
        self.materials.iter().all(|m| m.velocity.is_some())
    }

    /// Returns a copy with the spatial extent of every axis multiplied by `factor`.
    pub fn scaled_extent(&self, factor: f64) -> Result<Self> {
        let mut p = self.clone();
        for a in 0..p.grid.dims {
            let (lo, hi) = p.grid.extents[a];
            p.grid.extents[a] = (lo, lo + (hi - lo) * factor);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        ProblemFile::parse(text)?.into_problem()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        ProblemFile::read(path)?.into_problem()
    }
}

/// On-disk problem description (TOML).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub dims: usize,
    pub grid: GridSpec,
    pub quadrature: QuadratureSpec,
    #[serde(rename = "material")]
    pub materials: Vec<MaterialSpec>,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub nodes_x: usize,
    pub y: Option<[f64; 2]>,
    pub nodes_y: Option<usize>,
    pub z: Option<[f64; 2]>,
    pub nodes_z: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default)]
    pub name: String,
    pub sigma_t: Vec<f64>,
    pub sigma_s: Vec<Vec<f64>>,
    pub nu_sigma_f: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub sigma_f: Option<Vec<f64>>,
    pub chi: Vec<f64>,
    pub velocity: Option<Vec<f64>>,
}

/// Box of cells (by cell centre) assigned to `material`; later regions win.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub material: usize,
    pub x: Option<[f64; 2]>,
    pub y: Option<[f64; 2]>,
    pub z: Option<[f64; 2]>,
}

impl MaterialSpec {
    fn into_xs(self) -> Result<CrossSections> {
        let nu_sigma_f = match (self.nu_sigma_f, self.nu, self.sigma_f) {
            (Some(v), None, None) => v,
            (None, Some(nu), Some(sf)) => {
                if nu.len() != sf.len() {
                    return invalid("nu and sigma_f lengths differ");
                }
                nu.iter().zip(&sf).map(|(a, b)| a * b).collect()
            }
            _ => return invalid(format!("material '{}': give either nu_sigma_f or both nu and sigma_f", self.name)),
        };
        Ok(CrossSections {
            name: self.name,
            sigma_t: self.sigma_t,
            sigma_s: self.sigma_s,
            nu_sigma_f,
            chi: self.chi,
            velocity: self.velocity,
        })
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| NteError::Parse(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| NteError::Io(e).context(format!("reading {}", path.as_ref().display())))?;
        Self::parse(&text).map_err(|e| e.context(path.as_ref().display().to_string()))
    }

    /// Sets the node count of every axis the problem has.
    pub fn set_nodes(&mut self, n: usize) {
        self.grid.nodes_x = n;
        if self.dims == 3 {
            self.grid.nodes_y = Some(n);
            self.grid.nodes_z = Some(n);
        }
    }

    pub fn into_problem(self) -> Result<TransportProblem> {
        let g = &self.grid;
        let grid = match self.dims {
            1 => {
                if g.y.is_some() || g.z.is_some() || g.nodes_y.is_some() || g.nodes_z.is_some() {
                    return invalid("a 1D problem must not define y or z axes");
                }
                SpatialGrid {
                    dims: 1,
                    nodes: [g.nodes_x, 1, 1],
                    extents: [(g.x[0], g.x[1]), (0.0, 0.0), (0.0, 0.0)],
                }
            }
            3 => {
                let need = |v: Option<[f64; 2]>, n: Option<usize>, axis: &str| -> Result<((f64, f64), usize)> {
                    match (v, n) {
                        (Some(v), Some(n)) => Ok(((v[0], v[1]), n)),
                        _ => invalid(format!("a 3D problem needs {axis} and nodes_{axis}")),
                    }
                };
                let (ey, ny) = need(g.y, g.nodes_y, "y")?;
                let (ez, nz) = need(g.z, g.nodes_z, "z")?;
                SpatialGrid {
                    dims: 3,
                    nodes: [g.nodes_x, ny, nz],
                    extents: [(g.x[0], g.x[1]), ey, ez],
                }
            }
            d => return invalid(format!("dims = {d} is not supported (use 1 or 3)")),
        };
        grid.validate()?;
        let quadrature = build_quadrature(self.quadrature.n, grid.dims)?;
        let materials = self
            .materials
            .into_iter()
            .map(MaterialSpec::into_xs)
            .collect::<Result<Vec<_>>>()?;
        let cell_material = paint_regions(&grid, &self.regions, materials.len())?;
        let p = TransportProblem {
            name: self.name,
            grid,
            quadrature,
            materials,
            cell_material,
        };
        p.validate()?;
        Ok(p)
    }
}

fn paint_regions(grid: &SpatialGrid, regions: &[RegionSpec], nmat: usize) -> Result<Vec<usize>> {
    let shape = grid.cell_shape();
    let mut map = vec![0usize; grid.num_cells()];
    for r in regions {
        if r.material >= nmat {
            return invalid(format!("region refers to missing material {}", r.material));
        }
        if grid.dims == 1 && (r.y.is_some() || r.z.is_some()) {
            return invalid("a 1D region must not restrict y or z");
        }
        let bounds = [r.x, r.y, r.z];
        for (c, slot) in map.iter_mut().enumerate() {
            // decompose c into storage-order cell indices, then test each axis
            let mut rem = c;
            let mut inside = true;
            for (pos, &n) in shape.iter().enumerate().rev() {
                let idx = rem % n;
                rem /= n;
                let axis = grid.dims - 1 - pos;
                if let Some([lo, hi]) = bounds[axis] {
                    let centre = grid.extents[axis].0 + (idx as f64 + 0.5) * grid.step(axis);
                    inside &= centre >= lo && centre <= hi;
                }
            }
            if inside {
                *slot = r.material;
            }
        }
    }
    Ok(map)
}
