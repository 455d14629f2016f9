//! Unscaled vertex shapes.  A template is a counterclockwise polygon whose
//! designated sides are ports (open width-1 segments where edge tubes
//! attach); the remaining corners are rounded with circular arcs so the
//! boundary is C^{1,1}.  Sides adjacent to a port must leave the port
//! endpoint parallel to the port normal, which makes the joint with the
//! straight tube wall smooth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("polygon must be counterclockwise and non-degenerate")]
    BadPolygon,
    #[error("port side {0} has length {1}, expected exactly 1")]
    BadPortWidth(usize, f64),
    #[error("side adjacent to port {0} is not parallel to the port normal")]
    PortTangency(usize),
    #[error("rounding radius 0 leaves a corner; boundary would not be C^{{1,1}}")]
    NonSmoothBoundary,
    #[error("rounding radius {radius} does not fit at corner {corner} (available {available:.4})")]
    FilletTooLarge {
        corner: usize,
        radius: f64,
        available: f64,
    },
    #[error("ports must be separated by at least one non-port side")]
    AdjacentPorts,
    #[error("vertex shape self-intersects or leaves no room (gap {gap:.4} at port {port})")]
    SelfIntersection { port: usize, gap: f64 },
    #[error("collar of depth {depth} does not fit behind port {port}")]
    CollarDoesNotFit { port: usize, depth: f64 },
}

/// JSON form of a template: corner list, port sides, rounding radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateSpec {
    /// Counterclockwise corner coordinates.
    pub polygon: Vec<[f64; 2]>,
    /// Indices `i` such that the side from corner i to corner i+1 is a port.
    pub ports: Vec<usize>,
    pub r_round: f64,
}

type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: P2, b: P2) -> P2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: P2, s: f64) -> P2 {
    [a[0] * s, a[1] * s]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: P2) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: P2) -> P2 {
    scale(a, 1.0 / norm(a))
}

/// Counterclockwise quarter turn.
fn perp(a: P2) -> P2 {
    [-a[1], a[0]]
}

/// One boundary piece in traversal order.
#[derive(Debug, Clone)]
pub enum Piece {
    Line { a: P2, b: P2 },
    /// Circular arc from angle `start` through signed `sweep` around
    /// `center`.  Positive sweep is counterclockwise (convex corner for a
    /// ccw boundary, curvature +1/radius); negative sweep is a re-entrant
    /// fillet with curvature -1/radius.
    Arc {
        center: P2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Piece {
    pub fn start_point(&self) -> P2 {
        match *self {
            Piece::Line { a, .. } => a,
            Piece::Arc {
                center,
                radius,
                start,
                ..
            } => add(center, scale([start.cos(), start.sin()], radius)),
        }
    }

    pub fn end_point(&self) -> P2 {
        match *self {
            Piece::Line { b, .. } => b,
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let t = start + sweep;
                add(center, scale([t.cos(), t.sin()], radius))
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Line { a, b } => norm(sub(b, a)),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Signed curvature along the ccw boundary.
    pub fn curvature(&self) -> f64 {
        match *self {
            Piece::Line { .. } => 0.0,
            Piece::Arc { radius, sweep, .. } => sweep.signum() / radius,
        }
    }

    /// Points at arclength spacing <= h, excluding the end point.
    pub fn sample(&self, h: f64) -> Vec<P2> {
        let len = self.length();
        let n = ((len / h).ceil() as usize).max(1);
        (0..n).map(|i| self.point_at(i as f64 / n as f64)).collect()
    }

    pub fn point_at(&self, t: f64) -> P2 {
        match *self {
            Piece::Line { a, b } => add(a, scale(sub(b, a), t)),
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let ang = start + t * sweep;
                add(center, scale([ang.cos(), ang.sin()], radius))
            }
        }
    }

    /// Contribution to the area integral (1/2) * oint (x dy - y dx).
    fn area_term(&self) -> f64 {
        match *self {
            Piece::Line { a, b } => 0.5 * cross(a, b),
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let e0 = [start.cos(), start.sin()];
                let e1 = [(start + sweep).cos(), (start + sweep).sin()];
                0.5 * (radius * radius * sweep + radius * cross(center, sub(e1, e0)))
            }
        }
    }
}

/// A port: the open side where a tube attaches.  `a -> b` is the traversal
/// direction along the ccw boundary; `outward` is the unit normal pointing
/// into the tube.
#[derive(Debug, Clone)]
pub struct Port {
    pub a: P2,
    pub b: P2,
    pub outward: P2,
}

/// Validated unscaled vertex shape with a C^{1,1} solid boundary.
#[derive(Debug, Clone)]
pub struct VertexTemplate {
    pieces: Vec<Piece>,
    /// Port index for port pieces, None for solid boundary.
    piece_port: Vec<Option<usize>>,
    ports: Vec<Port>,
    r_round: f64,
}

impl VertexTemplate {
    /// Builds a template from a polygon-with-ports description: port sides
    /// are kept verbatim, every other corner is replaced by a tangent arc of
    /// radius `r_round` (corners with no turn are passed through).
    pub fn from_spec(spec: &TemplateSpec) -> Result<Self, TemplateError> {
        let n = spec.polygon.len();
        if n < 3 {
            return Err(TemplateError::BadPolygon);
        }
        let poly = &spec.polygon;
        let signed_area: f64 = (0..n)
            .map(|i| cross(poly[i], poly[(i + 1) % n]))
            .sum::<f64>()
            / 2.0;
        if signed_area <= 1e-12 {
            return Err(TemplateError::BadPolygon);
        }
        let is_port = {
            let mut v = vec![false; n];
            for &p in &spec.ports {
                if p >= n {
                    return Err(TemplateError::BadPolygon);
                }
                v[p] = true;
            }
            v
        };
        for (side, &p) in is_port.iter().enumerate() {
            if p && is_port[(side + 1) % n] {
                return Err(TemplateError::AdjacentPorts);
            }
        }
        for &side in &spec.ports {
            let len = norm(sub(poly[(side + 1) % n], poly[side]));
            if (len - 1.0).abs() > 1e-9 {
                return Err(TemplateError::BadPortWidth(side, len));
            }
        }

        // corner turn angles; corner i sits between side i-1 and side i
        let side_dir = |i: usize| normalize(sub(poly[(i + 1) % n], poly[i]));
        let turn_at = |corner: usize| -> f64 {
            let before = side_dir((corner + n - 1) % n);
            let after = side_dir(corner);
            cross(before, after).atan2(dot(before, after))
        };

        // a solid side meeting a port must run parallel to the port normal
        // (that is, perpendicular to the port side), so that it continues
        // the straight tube wall without a corner; such joints are left
        // unrounded
        let mut at_port = vec![false; n];
        for &side in &spec.ports {
            let port_dir = side_dir(side);
            for (corner, other) in [(side, (side + n - 1) % n), ((side + 1) % n, (side + 1) % n)] {
                if dot(side_dir(other), port_dir).abs() > 1e-9 {
                    return Err(TemplateError::PortTangency(side));
                }
                at_port[corner] = true;
            }
        }

        // fillet geometry per corner: offsets along the adjacent sides
        let mut offset = vec![0.0; n];
        for corner in 0..n {
            if at_port[corner] {
                continue;
            }
            let t = turn_at(corner);
            if t.abs() > 1e-9 {
                if spec.r_round <= 0.0 {
                    return Err(TemplateError::NonSmoothBoundary);
                }
                offset[corner] = spec.r_round * (t.abs() / 2.0).tan();
            }
        }
        // every side must keep positive length after the fillets bite
        for side in 0..n {
            let len = norm(sub(poly[(side + 1) % n], poly[side]));
            let used = offset[side] + offset[(side + 1) % n];
            if used > len - 1e-9 {
                return Err(TemplateError::FilletTooLarge {
                    corner: side,
                    radius: spec.r_round,
                    available: len,
                });
            }
        }

        let mut pieces = Vec::new();
        let mut piece_port = Vec::new();
        let mut ports = Vec::new();
        for side in 0..n {
            let a0 = poly[side];
            let b0 = poly[(side + 1) % n];
            let dir = side_dir(side);
            let a = add(a0, scale(dir, offset[side]));
            let b = sub(b0, scale(dir, offset[(side + 1) % n]));
            if is_port[side] {
                // ccw boundary keeps the interior on the left, so the
                // outward (tube-facing) normal is the right-hand normal
                let outward = scale(perp(dir), -1.0);
                ports.push(Port { a, b, outward });
                pieces.push(Piece::Line { a, b });
                piece_port.push(Some(ports.len() - 1));
            } else {
                pieces.push(Piece::Line { a, b });
                piece_port.push(None);
            }
            // arc replacing the corner at the end of this side
            let corner = (side + 1) % n;
            let t = turn_at(corner);
            if !at_port[corner] && t.abs() > 1e-9 {
                let r = spec.r_round;
                let d_in = dir;
                // fillet center: offset from the tangency point along the
                // inward normal (left of travel for convex turns, right for
                // re-entrant ones)
                let center = add(b, scale(perp(d_in), r * t.signum()));
                let start_vec = sub(b, center);
                let start = start_vec[1].atan2(start_vec[0]);
                pieces.push(Piece::Arc {
                    center,
                    radius: r,
                    start,
                    sweep: t,
                });
                piece_port.push(None);
            }
        }

        let tpl = Self {
            pieces,
            piece_port,
            ports,
            r_round: spec.r_round,
        };
        debug_assert!(tpl.is_closed());
        Ok(tpl)
    }

    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let spec: TemplateSpec =
            serde_json::from_str(text).map_err(|_| TemplateError::BadPolygon)?;
        Self::from_spec(&spec)
    }

    fn is_closed(&self) -> bool {
        self.pieces.iter().enumerate().all(|(i, p)| {
            let next = &self.pieces[(i + 1) % self.pieces.len()];
            norm(sub(p.end_point(), next.start_point())) < 1e-9
        })
    }

    pub fn degree(&self) -> usize {
        self.ports.len()
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_is_port(&self, i: usize) -> bool {
        self.piece_port[i].is_some()
    }

    pub fn r_round(&self) -> f64 {
        self.r_round
    }

    /// Exact area enclosed by the boundary.
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| p.area_term()).sum()
    }

    /// Largest negative-part curvature of the solid boundary (ports are
    /// interfaces and do not count).
    pub fn kappa_minus(&self) -> f64 {
        self.pieces
            .iter()
            .zip(&self.piece_port)
            .filter(|(_, port)| port.is_none())
            .map(|(p, _)| (-p.curvature()).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Homothetic copy (all lengths scaled by `s`).
    pub fn scaled(&self, s: f64) -> VertexTemplate {
        let map = |p: P2| scale(p, s);
        VertexTemplate {
            pieces: self
                .pieces
                .iter()
                .map(|p| match *p {
                    Piece::Line { a, b } => Piece::Line { a: map(a), b: map(b) },
                    Piece::Arc {
                        center,
                        radius,
                        start,
                        sweep,
                    } => Piece::Arc {
                        center: map(center),
                        radius: radius * s,
                        start,
                        sweep,
                    },
                })
                .collect(),
            piece_port: self.piece_port.clone(),
            ports: self
                .ports
                .iter()
                .map(|p| Port {
                    a: map(p.a),
                    b: map(p.b),
                    outward: p.outward,
                })
                .collect(),
            r_round: self.r_round * s,
        }
    }

    /// Closed boundary polyline sampled at spacing <= h (arcs finer so the
    /// chordal area defect stays negligible).  Returns the points and, for
    /// each port, the index range of its samples; every piece start point is
    /// included exactly once.
    pub fn boundary_polyline(&self, h: f64, port_stations: usize) -> (Vec<P2>, Vec<(usize, usize)>) {
        let mut points = Vec::new();
        let mut port_ranges = vec![(0usize, 0usize); self.ports.len()];
        for (piece, port) in self.pieces.iter().zip(&self.piece_port) {
            match port {
                Some(k) => {
                    let start = points.len();
                    for i in 0..port_stations {
                        points.push(piece.point_at(i as f64 / port_stations as f64));
                    }
                    port_ranges[*k] = (start, start + port_stations);
                }
                None => {
                    // arcs are capped at ~30 degrees per chord so curvature
                    // is resolved without dropping far below the mesh scale
                    let h_eff = match piece {
                        Piece::Arc { radius, .. } => h.min(radius * 0.5),
                        _ => h,
                    };
                    points.extend(piece.sample(h_eff));
                }
            }
        }
        (points, port_ranges)
    }

    /// Point-in-template test against the sampled boundary.
    pub fn contains(&self, p: P2) -> bool {
        let (poly, _) = self.boundary_polyline(0.02, 8);
        point_in_polygon(&poly, p)
    }

    /// Checks that a straight collar of the given depth fits behind port
    /// `k`: the full-width rectangle reaching `depth` into the shape must
    /// stay inside.
    pub fn collar_fits(&self, k: usize, depth: f64) -> bool {
        let (poly, _) = self.boundary_polyline(0.02, 8);
        let port = &self.ports[k];
        let inward = scale(port.outward, -1.0);
        let n_across = 15;
        let n_deep = 15;
        let inset = 1e-6;
        for i in 0..=n_across {
            let t = inset + (1.0 - 2.0 * inset) * i as f64 / n_across as f64;
            let base = add(port.a, scale(sub(port.b, port.a), t));
            for j in 1..=n_deep {
                let d = depth * j as f64 / n_deep as f64;
                if !point_in_polygon(&poly, add(base, scale(inward, d - inset))) {
                    return false;
                }
            }
        }
        true
    }

    pub fn require_collar(&self, depth: f64) -> Result<(), TemplateError> {
        for k in 0..self.ports.len() {
            if !self.collar_fits(k, depth) {
                return Err(TemplateError::CollarDoesNotFit { port: k, depth });
            }
        }
        Ok(())
    }
}

fn point_in_polygon(poly: &[P2], p: P2) -> bool {
    let mut winding = 0i32;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(sub(b, a), sub(p, a)) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross(sub(b, a), sub(p, a)) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Degree-1 cap: a rectangle of width 1 reaching `back_depth` behind the
/// port, far corners rounded.  The port sits at `port_dist` along `dir`
/// from the template origin.
pub fn cap(dir: P2, port_dist: f64, back_depth: f64, r_round: f64) -> TemplateSpec {
    let u = normalize(dir);
    let w = perp(u);
    let front = scale(u, port_dist);
    let back = scale(u, port_dist - back_depth);
    TemplateSpec {
        polygon: vec![
            sub(front, scale(w, 0.5)),
            add(front, scale(w, 0.5)),
            add(back, scale(w, 0.5)),
            sub(back, scale(w, 0.5)),
        ],
        ports: vec![0],
        r_round,
    }
}

/// Pipe-junction hub for degree >= 2: the tube walls continue inward from
/// each port to the pairwise wall intersections (gussets), which are then
/// rounded.  `dirs[k]` points along edge k away from the vertex and
/// `dists[k]` places port k; directions must be given in ccw order.
pub fn hub(dirs: &[P2], dists: &[f64], r_round: f64) -> Result<TemplateSpec, TemplateError> {
    let d = dirs.len();
    assert!(d >= 2);
    let units: Vec<P2> = dirs.iter().map(|&u| normalize(u)).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        let ta = units[a][1].atan2(units[a][0]);
        let tb = units[b][1].atan2(units[b][0]);
        ta.partial_cmp(&tb).unwrap()
    });

    let mut polygon = Vec::new();
    let mut ports = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        let u = units[k];
        let w = perp(u);
        let p_minus = sub(scale(u, dists[k]), scale(w, 0.5));
        let p_plus = add(scale(u, dists[k]), scale(w, 0.5));
        ports.push((polygon.len(), k));
        polygon.push(p_minus);
        polygon.push(p_plus);

        // gusset between this port and the next one counterclockwise
        let knext = order[(pos + 1) % d];
        let un = units[knext];
        let gap = {
            let mut g = un[1].atan2(un[0]) - u[1].atan2(u[0]);
            while g <= 0.0 {
                g += std::f64::consts::TAU;
            }
            g
        };
        if (gap - std::f64::consts::PI).abs() < 1e-9 {
            // collinear walls join with no corner
            continue;
        }
        // wall lines: x . perp(u) = 1/2 and x . perp(un) = -1/2
        let a11 = perp(u);
        let a21 = perp(un);
        let det = cross(a11, a21);
        if det.abs() < 1e-12 {
            return Err(TemplateError::SelfIntersection { port: k, gap: 0.0 });
        }
        // solve [a11; a21] g = [1/2; -1/2]
        let g = [
            (0.5 * a21[1] - (-0.5) * a11[1]) / det,
            ((-0.5) * a11[0] - 0.5 * a21[0]) / det,
        ];
        // the ports must sit beyond the gusset, with room for the fillet
        let reach_this = dot(g, u);
        let reach_next = dot(g, un);
        let turn = std::f64::consts::PI - gap; // magnitude of the wall turn
        let off = r_round * (turn.abs() / 2.0).tan();
        for (port_id, reach, dist) in [(k, reach_this, dists[k]), (knext, reach_next, dists[knext])]
        {
            let room = dist - reach - off;
            if room < 1e-6 {
                return Err(TemplateError::SelfIntersection {
                    port: port_id,
                    gap: room,
                });
            }
        }
        polygon.push(g);
    }

    // rotate the polygon so it stays ccw-ordered starting from a port side;
    // ports were recorded by polygon index already
    Ok(TemplateSpec {
        polygon,
        ports: ports.iter().map(|&(i, _)| i).collect(),
        r_round,
    })
}

/// Port order used by `hub`: ccw by direction angle.  Returns for each port
/// index in the template the originating edge slot.
pub fn hub_port_order(dirs: &[P2]) -> Vec<usize> {
    let units: Vec<P2> = dirs.iter().map(|&u| normalize(u)).collect();
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = units[a][1].atan2(units[a][0]);
        let tb = units[b][1].atan2(units[b][0]);
        ta.partial_cmp(&tb).unwrap()
    });
    order
}

/// Default abstract template for a vertex of the given degree: ports evenly
/// spaced, distances chosen so the fillets and a collar of depth
/// `collar_depth` always fit.
pub fn abstract_template(
    degree: usize,
    collar_depth: f64,
    r_round: f64,
) -> Result<VertexTemplate, TemplateError> {
    let spec = if degree == 1 {
        cap(
            [1.0, 0.0],
            0.0,
            collar_depth + 2.0 * r_round + 0.35,
            r_round,
        )
    } else {
        let gap = std::f64::consts::TAU / degree as f64;
        let reach = if degree == 2 {
            0.0
        } else {
            0.5 / (gap / 2.0).tan()
        };
        let turn = (std::f64::consts::PI - gap).abs();
        let off = r_round * (turn / 2.0).tan();
        let dist = reach + off + collar_depth.max(0.25) + 0.05;
        let dirs: Vec<P2> = (0..degree)
            .map(|k| {
                let t = gap * k as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        hub(&dirs, &vec![dist; degree], r_round)?
    };
    let tpl = VertexTemplate::from_spec(&spec)?;
    tpl.require_collar(collar_depth)?;
    Ok(tpl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_template_geometry() {
        let tpl = VertexTemplate::from_spec(&cap([1.0, 0.0], 0.0, 1.0, 0.2)).unwrap();
        assert_eq!(tpl.degree(), 1);
        // 1x1 rectangle minus the two rounded back corners
        let expect = 1.0 - 2.0 * 0.04 * (1.0 - std::f64::consts::PI / 4.0);
        assert!((tpl.area() - expect).abs() < 1e-12, "{}", tpl.area());
        assert_eq!(tpl.kappa_minus(), 0.0); // convex
        assert!(tpl.collar_fits(0, 0.5));
        assert!(!tpl.collar_fits(0, 1.2)); // deeper than the cap
    }

    #[test]
    fn straight_degree_two_template() {
        let spec = hub(&[[1.0, 0.0], [-1.0, 0.0]], &[0.6, 0.6], 0.2).unwrap();
        let tpl = VertexTemplate::from_spec(&spec).unwrap();
        assert_eq!(tpl.degree(), 2);
        assert!((tpl.area() - 1.2).abs() < 1e-12); // pure strip
        assert_eq!(tpl.kappa_minus(), 0.0);
        assert!(tpl.collar_fits(0, 1.0));
    }

    #[test]
    fn three_hub_has_reentrant_fillets() {
        let dirs = [[1.0, 0.0], [-0.5, 0.75f64.sqrt()], [-0.5, -(0.75f64.sqrt())]];
        let spec = hub(&dirs, &[0.72; 3], 0.2).unwrap();
        let tpl = VertexTemplate::from_spec(&spec).unwrap();
        assert_eq!(tpl.degree(), 3);
        assert!((tpl.kappa_minus() - 5.0).abs() < 1e-12); // 1/r with r = 0.2
        assert!(tpl.collar_fits(0, 0.25));
        // sanity: center is inside, far field is not
        assert!(tpl.contains([0.0, 0.0]));
        assert!(!tpl.contains([2.0, 2.0]));
    }

    #[test]
    fn hub_rejects_ports_too_close() {
        let dirs = [[1.0, 0.0], [-0.5, 0.75f64.sqrt()], [-0.5, -(0.75f64.sqrt())]];
        let err = hub(&dirs, &[0.15; 3], 0.2).unwrap_err();
        assert!(matches!(err, TemplateError::SelfIntersection { .. }));
    }

    #[test]
    fn port_tangency_is_enforced() {
        // trapezoid: the side after the port is slanted, so the junction
        // with a straight tube wall would have a corner
        let spec = TemplateSpec {
            polygon: vec![[0.0, -0.5], [0.0, 0.5], [-1.0, 0.8], [-1.0, -0.8]],
            ports: vec![0],
            r_round: 0.2,
        };
        assert!(matches!(
            VertexTemplate::from_spec(&spec),
            Err(TemplateError::PortTangency(0))
        ));
    }

    #[test]
    fn zero_radius_on_cornered_shape_is_rejected() {
        let spec = cap([1.0, 0.0], 0.0, 1.0, 0.0);
        assert!(matches!(
            VertexTemplate::from_spec(&spec),
            Err(TemplateError::NonSmoothBoundary)
        ));
    }

    #[test]
    fn scaled_template_scales_area_and_curvature() {
        let tpl = abstract_template(3, 0.25, 0.2).unwrap();
        let s = tpl.scaled(2.0);
        assert!((s.area() - 4.0 * tpl.area()).abs() < 1e-10);
        assert!((s.kappa_minus() - tpl.kappa_minus() / 2.0).abs() < 1e-12);
        let back = s.scaled(0.5);
        assert!((back.area() - tpl.area()).abs() < 1e-12);
    }

    #[test]
    fn abstract_templates_for_all_degrees() {
        for d in 1..=5 {
            let tpl = abstract_template(d, 0.25, 0.2).unwrap();
            assert_eq!(tpl.degree(), d);
            assert!(tpl.area() > 0.0);
            for k in 0..d {
                let p = &tpl.ports()[k];
                assert!((norm(sub(p.b, p.a)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn area_matches_polyline_estimate() {
        let tpl = abstract_template(4, 0.25, 0.2).unwrap();
        let (poly, _) = tpl.boundary_polyline(0.01, 64);
        let shoelace: f64 = (0..poly.len())
            .map(|i| cross(poly[i], poly[(i + 1) % poly.len()]))
            .sum::<f64>()
            / 2.0;
        assert!(
            (shoelace - tpl.area()).abs() < 2e-4 * tpl.area(),
            "{shoelace} vs {}",
            tpl.area()
        );
    }
}
