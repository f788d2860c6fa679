use std::f64::consts::PI;

use crate::bthread::{BProgram, BThread};
use crate::error::{Error, Result};
use crate::smt::Formula;
use crate::statement::{ConstraintStatement, Resume};

/// Inside the closed unit circle.
pub fn in_circle() -> Formula {
    let (x, y) = (Formula::real_var("x"), Formula::real_var("y"));
    (x.clone() * x + y.clone() * y).le(Formula::real(1.0))
}

/// Clears rounding noise so that e.g. the square's vertices are exact.
fn snap(v: f64) -> f64 {
    let r = (v * 2.0).round() / 2.0;
    if (v - r).abs() < 1e-12 {
        r
    } else {
        v
    }
}

/// Vertex `k` of the regular `n`-gon inscribed in the unit circle with a
/// vertex at (1, 0).
pub fn vertex(n: u32, k: u32) -> (f64, f64) {
    let angle = 2.0 * PI * f64::from(k % n) / f64::from(n);
    (snap(angle.cos()), snap(angle.sin()))
}

/// Strictly outside the polygon: to the right of at least one of its
/// counter-clockwise edges. Edges are built from the vertex coordinates,
/// so the polygon is exactly the hull of [`vertex`] points.
pub fn outside_polygon(n: u32) -> Formula {
    let (x, y) = (Formula::real_var("x"), Formula::real_var("y"));
    Formula::or((0..n).map(|k| {
        let (x0, y0) = vertex(n, k);
        let (x1, y1) = vertex(n, k + 1);
        let dx = Formula::real(x1) - Formula::real(x0);
        let dy = Formula::real(y1) - Formula::real(y0);
        let cross = dx * (y.clone() - Formula::real(y0)) - dy * (x.clone() - Formula::real(x0));
        cross.lt(Formula::real(0.0))
    }))
}

/// One request for a point between the polygon and its circumscribing
/// circle.
pub fn circled_polygon(n: u32) -> Result<BProgram> {
    if n < 3 {
        return Err(Error::InvalidParameters(format!("a polygon needs at least 3 edges (got {n})")));
    }
    let query = Formula::and([in_circle(), outside_polygon(n)]);
    let t = BThread::from_fns(
        "polygon",
        false,
        move |done: &bool| Ok((!done).then(|| ConstraintStatement::new().request(query.clone()).into())),
        |_: &bool, _: &Resume| Ok(true),
    );
    BProgram::from_threads("circled_polygon", [t])
}
