//! Supercover line walking between tile centres.
//!
//! A tile is on the line when the closed segment joining the two tile centres
//! meets the closed tile square. Passing exactly through a lattice corner
//! therefore visits both side tiles, so a sight line cannot squeeze between
//! two diagonally touching walls.

use super::Pos;

/// Calls `visit` for every tile of the supercover line from `a` to `b`,
/// starting with `a` and ending with `b`. Stops early when `visit` returns
/// `false`; the return value reports whether the walk completed.
pub fn walk_supercover(a: Pos, b: Pos, mut visit: impl FnMut(Pos) -> bool) -> bool {
    let (mut x, mut y) = (a.x, a.y);
    let mut dx = b.x - a.x;
    let mut dy = b.y - a.y;
    let xstep = if dx < 0 { -1 } else { 1 };
    let ystep = if dy < 0 { -1 } else { 1 };
    dx = dx.abs();
    dy = dy.abs();
    if !visit(Pos::new(x, y)) {
        return false;
    }
    let ddx = 2 * dx;
    let ddy = 2 * dy;
    if ddx >= ddy {
        let mut error = dx;
        let mut prev = dx;
        for _ in 0..dx {
            x += xstep;
            error += ddy;
            if error > ddx {
                y += ystep;
                error -= ddx;
                let side = error + prev;
                if side < ddx {
                    if !visit(Pos::new(x, y - ystep)) {
                        return false;
                    }
                } else if side > ddx {
                    if !visit(Pos::new(x - xstep, y)) {
                        return false;
                    }
                } else if !visit(Pos::new(x, y - ystep)) || !visit(Pos::new(x - xstep, y)) {
                    return false;
                }
            }
            if !visit(Pos::new(x, y)) {
                return false;
            }
            prev = error;
        }
    } else {
        let mut error = dy;
        let mut prev = dy;
        for _ in 0..dy {
            y += ystep;
            error += ddx;
            if error > ddy {
                x += xstep;
                error -= ddy;
                let side = error + prev;
                if side < ddy {
                    if !visit(Pos::new(x - xstep, y)) {
                        return false;
                    }
                } else if side > ddy {
                    if !visit(Pos::new(x, y - ystep)) {
                        return false;
                    }
                } else if !visit(Pos::new(x - xstep, y)) || !visit(Pos::new(x, y - ystep)) {
                    return false;
                }
            }
            if !visit(Pos::new(x, y)) {
                return false;
            }
            prev = error;
        }
    }
    true
}

/// All tiles on the supercover line, sorted row-major and deduplicated.
pub fn supercover(a: Pos, b: Pos) -> Vec<Pos> {
    let mut out = Vec::new();
    walk_supercover(a, b, |p| {
        out.push(p);
        true
    });
    out.sort();
    out.dedup();
    out
}
