use super::{Entity, EntityKind, RobotParams, RobotState, CAMERA_CELLS, CAMERA_SIDE, PROXIMITY_SENSORS};

const RANGE_EPS: f64 = 1e-9;

/// Distance along the ray from `(ox, oy)` in unit direction `(dx, dy)` to
/// the first intersection with a circle, if any lies ahead.
fn ray_circle(ox: f64, oy: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let fx = ox - cx;
    let fy = oy - cy;
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - r * r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= 0.0).then_some(t)
}

/// Distance from an interior point to the arena boundary along a ray.
fn ray_walls(ox: f64, oy: f64, dx: f64, dy: f64, arena: f64) -> f64 {
    let mut t = f64::INFINITY;
    if dx > 0.0 {
        t = t.min((arena - ox) / dx);
    } else if dx < 0.0 {
        t = t.min(-ox / dx);
    }
    if dy > 0.0 {
        t = t.min((arena - oy) / dy);
    } else if dy < 0.0 {
        t = t.min(-oy / dy);
    }
    t.max(0.0)
}

/// Sixteen normalized range readings at `heading + i·2π/16`.
///
/// Distances are measured from the robot's body perimeter to the nearest
/// obstacle or arena wall; a reading of 1 means nothing within range.
pub fn sense_proximity(state: &RobotState, entities: &[Entity], arena: f64, params: &RobotParams) -> Vec<f64> {
    (0..PROXIMITY_SENSORS)
        .map(|i| {
            let a = state.heading + i as f64 * std::f64::consts::TAU / PROXIMITY_SENSORS as f64;
            let (dx, dy) = (a.cos(), a.sin());
            let mut t = ray_walls(state.x, state.y, dx, dy, arena);
            for e in entities.iter().filter(|e| e.kind == EntityKind::Obstacle) {
                if let Some(h) = ray_circle(state.x, state.y, dx, dy, e.x, e.y, e.radius) {
                    t = t.min(h);
                }
            }
            let reading = (t - params.body_radius).max(0.0) / params.sensor_range;
            // the range boundary is inclusive up to rounding
            if reading >= 1.0 - RANGE_EPS {
                1.0
            } else {
                reading
            }
        })
        .collect()
}

/// Egocentric top-down grid of the square window ahead of the robot.
///
/// Row 0 is the far edge and row 63 the edge at the robot; column 0 is the
/// robot's left. A cell takes the kind code of the nearest active entity
/// containing its centre, or 0.
pub fn render_camera(state: &RobotState, entities: &[Entity], params: &RobotParams) -> Vec<f64> {
    let mut grid = vec![0.0; CAMERA_CELLS];
    let side = CAMERA_SIDE as f64;
    let cell = params.camera_extent / side;
    let half = params.camera_extent / 2.0;
    let (cos, sin) = (state.heading.cos(), state.heading.sin());

    // (forward, rightward, distance, entity)
    let mut visible: Vec<(f64, f64, f64, &Entity)> = entities
        .iter()
        .filter(|e| e.active)
        .filter_map(|e| {
            let wx = e.x - state.x;
            let wy = e.y - state.y;
            let fwd = wx * cos + wy * sin;
            let right = wx * sin - wy * cos;
            let inside = fwd + e.radius >= 0.0
                && fwd - e.radius <= params.camera_extent
                && right + e.radius >= -half
                && right - e.radius <= half;
            inside.then(|| (fwd, right, wx.hypot(wy), e))
        })
        .collect();
    visible.sort_by(|a, b| b.2.total_cmp(&a.2));

    let to_index = |v: f64| (v / cell).floor().clamp(0.0, side - 1.0) as usize;
    for (fwd, right, _, e) in visible {
        let code = e.kind.camera_code();
        let r2 = e.radius * e.radius;
        // forward distance of row r's centre is (63 - r + 0.5)·cell
        let far = to_index(fwd + e.radius);
        let near = to_index(fwd - e.radius);
        let (row_lo, row_hi) = (CAMERA_SIDE - 1 - far, CAMERA_SIDE - 1 - near);
        let col_lo = to_index(right - e.radius + half);
        let col_hi = to_index(right + e.radius + half);
        for r in row_lo..=row_hi {
            let cf = (CAMERA_SIDE - 1 - r) as f64 * cell + cell / 2.0;
            for c in col_lo..=col_hi {
                let cr = c as f64 * cell + cell / 2.0 - half;
                let (df, dr) = (cf - fwd, cr - right);
                if df * df + dr * dr <= r2 {
                    grid[r * CAMERA_SIDE + c] = code;
                }
            }
        }
    }
    grid
}
