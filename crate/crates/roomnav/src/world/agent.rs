//! Agent state and unicycle kinematics with swept collision checking.

use serde::{Deserialize, Serialize};

use crate::config::EmbodimentProfile;
use crate::geom::{wrap_angle, Pose};
use crate::world::map::World;

/// Mutable per-episode agent state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub pose: Pose,
    pub elapsed: f64,
    pub traveled: f64,
}

impl AgentState {
    pub fn at(pose: Pose) -> Self {
        AgentState {
            pose,
            elapsed: 0.0,
            traveled: 0.0,
        }
    }
}

/// Velocity command: linear (m/s) and angular (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

impl Command {
    pub const STOP: Command = Command { v: 0.0, omega: 0.0 };
}

/// Integrate one tick of unicycle motion.
///
/// Velocities are clamped to the profile limits. Translation uses the
/// pre-rotation heading. If the swept footprint (open disc of the profile
/// radius, sampled along the displacement) touches occupied space the whole
/// command is dropped: pose unchanged, only `elapsed` advances.
pub fn step(
    world: &World,
    state: &AgentState,
    cmd: Command,
    dt: f64,
    profile: &EmbodimentProfile,
) -> AgentState {
    let v = cmd.v.clamp(-profile.v_max, profile.v_max);
    let omega = cmd.omega.clamp(-profile.omega_max, profile.omega_max);
    let mut next = *state;
    next.elapsed += dt;

    let dx = v * dt * state.pose.heading.cos();
    let dy = v * dt * state.pose.heading.sin();
    let dist = (dx * dx + dy * dy).sqrt();

    if dist > 0.0 {
        let step_len = world.resolution() * 0.25;
        let n = (dist / step_len).ceil().max(1.0) as u32;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let px = state.pose.x + dx * t;
            let py = state.pose.y + dy * t;
            if !world.map.clearance_ok(px, py, profile.radius) {
                // Blocked: a normal outcome, not an error.
                return next;
            }
        }
        next.pose.x += dx;
        next.pose.y += dy;
        next.traveled += dist;
    }
    next.pose.heading = wrap_angle(state.pose.heading + omega * dt);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::map::load_map_str;

    fn corridor() -> World {
        // 20 x 5 free cells walled all around, 0.1 m resolution.
        let mut grid = vec!["#".repeat(22)];
        for _ in 0..5 {
            grid.push(format!("#{}#", ".".repeat(20)));
        }
        grid.push("#".repeat(22));
        let json = serde_json::json!({
            "format": 1,
            "resolution": 0.1,
            "grid": grid,
            "rooms": [{"id": 0, "label": "corridor", "rects": [[1,1,20,5]]}],
            "doors": [],
            "objects": []
        });
        load_map_str(&json.to_string()).unwrap()
    }

    #[test]
    fn zero_command_only_advances_time() {
        let world = corridor();
        let s0 = AgentState::at(Pose::new(1.0, 0.35, 0.0));
        let s1 = step(&world, &s0, Command::STOP, 0.1, &EmbodimentProfile::wheeled());
        assert_eq!(s1.pose, s0.pose);
        assert_eq!(s1.traveled, 0.0);
        assert!((s1.elapsed - 0.1).abs() < 1e-12);
    }

    #[test]
    fn straight_motion_integrates_exactly() {
        let world = corridor();
        let s0 = AgentState::at(Pose::new(0.5, 0.35, 0.0));
        let s1 = step(
            &world,
            &s0,
            Command { v: 1.0, omega: 0.0 },
            0.5,
            &EmbodimentProfile::wheeled(),
        );
        assert!((s1.pose.x - 1.0).abs() < 1e-12);
        assert!((s1.traveled - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wall_blocks_motion() {
        let world = corridor();
        let profile = EmbodimentProfile::wheeled();
        // Interior ends at x=2.1; with radius 0.30 the rightmost reachable
        // center is around x ~ 2.1 - 0.25 (wall centers at 2.15).
        let mut s = AgentState::at(Pose::new(1.6, 0.35, 0.0));
        for _ in 0..20 {
            s = step(&world, &s, Command { v: 1.0, omega: 0.0 }, 0.1, &profile);
        }
        assert!(s.pose.x < 2.1 - profile.radius + world.resolution());
        // Blocked ticks still accumulate time.
        assert!((s.elapsed - 2.0).abs() < 1e-9);
        // The final pose keeps full clearance.
        assert!(world.map.clearance_ok(s.pose.x, s.pose.y, profile.radius));
    }

    #[test]
    fn rotation_never_blocks() {
        let world = corridor();
        let profile = EmbodimentProfile::wheeled();
        let s0 = AgentState::at(Pose::new(0.5, 0.35, 0.0));
        let s1 = step(&world, &s0, Command { v: 0.0, omega: 2.0 }, 0.1, &profile);
        assert!((s1.pose.heading - 0.2).abs() < 1e-12);
        assert_eq!(s1.pose.x, s0.pose.x);
    }

    #[test]
    fn speed_clamped_to_profile() {
        let world = corridor();
        let s0 = AgentState::at(Pose::new(0.5, 0.35, 0.0));
        let s1 = step(
            &world,
            &s0,
            Command { v: 99.0, omega: 0.0 },
            0.1,
            &EmbodimentProfile::wheeled(),
        );
        assert!((s1.traveled - 0.1).abs() < 1e-12);
    }
}
