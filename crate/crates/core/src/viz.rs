//! Plot data and minimal SVG renderings for inspecting fitted models.
//!
//! Three figure families are supported: circular archetype plots, adjacency
//! matrices reordered by membership, and two-component PCA projections of the
//! embeddings. Every emitter formats numbers with a fixed precision, so the
//! same inputs always produce the same bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Space};
use crate::sgraph::{Edge, SignedGraph};

const SVG_SIZE: f64 = 800.0;
const SVG_MARGIN: f64 = 40.0;

/// Nodes placed inside a regular polygon whose corners are the archetypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularLayout {
    pub space: Space,
    /// Archetype `k` at angle `2 pi k / K` on the unit circle.
    pub anchors: Vec<[f64; 2]>,
    /// Membership-weighted average of the anchors, one point per node.
    pub nodes: Vec<[f64; 2]>,
    /// Index of the largest membership of each node.
    pub dominant: Vec<usize>,
    /// Edges whose sign matches the space.
    pub edges: Vec<Edge>,
}

pub fn anchor_positions(k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|d| {
            let angle = 2.0 * PI * d as f64 / k as f64;
            [angle.cos(), angle.sin()]
        })
        .collect()
}

fn dominant_archetype(q: &Array2<f64>) -> Vec<usize> {
    q.columns()
        .into_iter()
        .map(|c| {
            let mut best = 0;
            for (d, &v) in c.iter().enumerate() {
                if v > c[best] {
                    best = d;
                }
            }
            best
        })
        .collect()
}

fn sign_matches(space: Space, y: i64) -> bool {
    match space {
        Space::Pos => y > 0,
        Space::Neg => y < 0,
    }
}

/// Layout from an explicit `K x N` membership matrix.
pub fn circular_from_memberships(q: &Array2<f64>, space: Space, edges: Vec<Edge>) -> CircularLayout {
    let anchors = anchor_positions(q.nrows());
    let nodes = q
        .columns()
        .into_iter()
        .map(|c| {
            c.iter().zip(&anchors).fold([0.0, 0.0], |acc, (&m, a)| [acc[0] + m * a[0], acc[1] + m * a[1]])
        })
        .collect();
    CircularLayout {
        space,
        anchors,
        nodes,
        dominant: dominant_archetype(q),
        edges,
    }
}

pub fn circular_layout(params: &ModelParams, g: &SignedGraph, space: Space) -> Result<CircularLayout> {
    check_nodes(params, g)?;
    let edges = g.edges().iter().copied().filter(|e| sign_matches(space, e.y)).collect();
    Ok(circular_from_memberships(&params.memberships(space), space, edges))
}

fn check_nodes(params: &ModelParams, g: &SignedGraph) -> Result<()> {
    if params.n_nodes() != g.n_nodes() {
        return Err(Error::domain(format!(
            "model has {} nodes but the graph has {}",
            params.n_nodes(),
            g.n_nodes()
        )));
    }
    Ok(())
}

impl CircularLayout {
    pub const CSV_HEADER: &'static str = "node,id,x,y,dominant";

    pub fn to_csv(&self, ids: &[String]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, p) in self.nodes.iter().enumerate() {
            let id = ids.get(i).map(String::as_str).unwrap_or("");
            let _ = writeln!(out, "{i},{id},{:.6},{:.6},{}", p[0], p[1], self.dominant[i]);
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let radius = (SVG_SIZE - 2.0 * SVG_MARGIN) / 2.0;
        let centre = SVG_SIZE / 2.0;
        let px = |p: &[f64; 2]| (centre + radius * p[0], centre - radius * p[1]);
        let colour = match self.space {
            Space::Pos => "#1f6fb4",
            Space::Neg => "#c0392b",
        };
        let mut svg = svg_open();
        let _ = writeln!(
            svg,
            r##"<circle cx="{centre:.2}" cy="{centre:.2}" r="{radius:.2}" fill="none" stroke="#999999"/>"##
        );
        for e in &self.edges {
            let (x1, y1) = px(&self.nodes[e.u]);
            let (x2, y2) = px(&self.nodes[e.v]);
            let _ = writeln!(
                svg,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{colour}" stroke-opacity="0.15"/>"#
            );
        }
        for p in &self.nodes {
            let (x, y) = px(p);
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{colour}"/>"#);
        }
        for (k, a) in self.anchors.iter().enumerate() {
            let (x, y) = px(a);
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="6" fill="black"/>"#);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">A{k}</text>"#,
                centre + (radius + 20.0) * a[0],
                centre - (radius + 20.0) * a[1] + 5.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn svg_open() -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_SIZE}\" height=\"{SVG_SIZE}\" viewBox=\"0 0 {SVG_SIZE} {SVG_SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Signed adjacency restricted to one sign, with rows and columns reordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedAdjacency {
    pub space: Space,
    /// `permutation[r]` is the node shown at row and column `r`.
    pub permutation: Vec<usize>,
    /// Nonzero entries `(row, col, y)` of the reordered matrix, both triangles,
    /// sorted by row then column.
    pub entries: Vec<(usize, usize, i64)>,
}

/// Node order by dominant archetype, then decreasing dominant membership,
/// then node index.
pub fn membership_order(q: &Array2<f64>) -> Vec<usize> {
    let dominant = dominant_archetype(q);
    let mut order: Vec<usize> = (0..q.ncols()).collect();
    order.sort_by(|&i, &j| {
        dominant[i]
            .cmp(&dominant[j])
            .then(q[[dominant[j], j]].total_cmp(&q[[dominant[i], i]]))
            .then(i.cmp(&j))
    });
    order
}

pub fn ordered_adjacency_from(q: &Array2<f64>, g: &SignedGraph, space: Space) -> Result<OrderedAdjacency> {
    if q.ncols() != g.n_nodes() {
        return Err(Error::domain(format!(
            "memberships cover {} nodes but the graph has {}",
            q.ncols(),
            g.n_nodes()
        )));
    }
    let permutation = membership_order(q);
    let mut position = vec![0; permutation.len()];
    for (r, &node) in permutation.iter().enumerate() {
        position[node] = r;
    }
    let mut entries: Vec<(usize, usize, i64)> = g
        .edges()
        .iter()
        .filter(|e| sign_matches(space, e.y))
        .flat_map(|e| {
            let (a, b) = (position[e.u], position[e.v]);
            [(a, b, e.y), (b, a, e.y)]
        })
        .collect();
    entries.sort_unstable();
    Ok(OrderedAdjacency {
        space,
        permutation,
        entries,
    })
}

pub fn ordered_adjacency(params: &ModelParams, g: &SignedGraph, space: Space) -> Result<OrderedAdjacency> {
    check_nodes(params, g)?;
    ordered_adjacency_from(&params.memberships(space), g, space)
}

impl OrderedAdjacency {
    pub const CSV_HEADER: &'static str = "row,col,node_row,node_col,y";

    pub fn n(&self) -> usize {
        self.permutation.len()
    }

    pub fn dense(&self) -> Array2<i64> {
        let mut m = Array2::zeros((self.n(), self.n()));
        for &(r, c, y) in &self.entries {
            m[[r, c]] = y;
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for &(r, c, y) in &self.entries {
            let _ = writeln!(out, "{r},{c},{},{},{y}", self.permutation[r], self.permutation[c]);
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let n = self.n().max(1) as f64;
        let cell = (SVG_SIZE - 2.0 * SVG_MARGIN) / n;
        let colour = match self.space {
            Space::Pos => "#1f6fb4",
            Space::Neg => "#c0392b",
        };
        let mut svg = svg_open();
        let _ = writeln!(
            svg,
            r##"<rect x="{SVG_MARGIN:.2}" y="{SVG_MARGIN:.2}" width="{w:.2}" height="{w:.2}" fill="none" stroke="#999999"/>"##,
            w = SVG_SIZE - 2.0 * SVG_MARGIN
        );
        let size = cell.max(0.5);
        for &(r, c, _) in &self.entries {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.3}" y="{:.3}" width="{size:.3}" height="{size:.3}" fill="{colour}"/>"#,
                SVG_MARGIN + c as f64 * cell,
                SVG_MARGIN + r as f64 * cell
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2d {
    /// Projected coordinates, `N x 2`.
    pub coords: Array2<f64>,
    /// Unit principal directions as columns, `P x 2`.
    pub components: Array2<f64>,
    /// Share of the total variance carried by each component.
    pub explained: [f64; 2],
}

/// Projection of the rows of `points` (`N x P`) onto the two leading
/// principal directions of their sample covariance.
///
/// Each direction is oriented so that its largest-magnitude entry is
/// positive. With a single input column the second component is zero.
pub fn pca_2d(points: &Array2<f64>) -> Result<Pca2d> {
    let (n, p) = points.dim();
    if n < 2 {
        return Err(Error::domain(format!("PCA needs at least two points, got {n}")));
    }
    if p == 0 {
        return Err(Error::DegeneratePca);
    }
    let mean = points.mean_axis(Axis(0)).expect("n >= 2");
    let centred = points - &mean;
    let cov = centred.t().dot(&centred) / (n - 1) as f64;
    let total: f64 = cov.diag().sum();
    let scale = points.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if !(total > 1e-24 * scale * scale) {
        return Err(Error::DegeneratePca);
    }
    let eig = SymmetricEigen::new(DMatrix::from_fn(p, p, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Array2::zeros((p, 2));
    let mut explained = [0.0; 2];
    for (slot, &idx) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let mut lead = 0;
        for r in 1..p {
            if v[r].abs() > v[lead].abs() {
                lead = r;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..p {
            components[[r, slot]] = sign * v[r];
        }
        explained[slot] = eig.eigenvalues[idx].max(0.0) / total;
    }
    Ok(Pca2d {
        coords: centred.dot(&components),
        components,
        explained,
    })
}

/// PCA of the projected embeddings `A z_i` of one space.
pub fn embedding_pca(params: &ModelParams, space: Space) -> Result<Pca2d> {
    let arch = params.archetypes()?;
    let embedded = arch.get(space).dot(&params.memberships(space));
    pca_2d(&embedded.t().to_owned())
}

impl Pca2d {
    pub const CSV_HEADER: &'static str = "node,pc1,pc2";

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# explained {:.6} {:.6}\n{}\n",
            self.explained[0],
            self.explained[1],
            Self::CSV_HEADER
        );
        for (i, row) in self.coords.rows().into_iter().enumerate() {
            let _ = writeln!(out, "{i},{:.6},{:.6}", row[0], row[1]);
        }
        out
    }

    pub fn to_svg(&self, labels: Option<&[usize]>) -> String {
        let extent = self.coords.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let half = (SVG_SIZE - 2.0 * SVG_MARGIN) / 2.0;
        let centre = SVG_SIZE / 2.0;
        let mut svg = svg_open();
        for (i, row) in self.coords.rows().into_iter().enumerate() {
            let fill = labels.map_or("#333333", |l| PALETTE[l[i] % PALETTE.len()]);
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}"/>"#,
                centre + half * row[0] / extent,
                centre - half * row[1] / extent
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Dominant archetype of every node, for colouring projections.
pub fn dominant_labels(params: &ModelParams, space: Space) -> Vec<usize> {
    dominant_archetype(&params.memberships(space))
}
