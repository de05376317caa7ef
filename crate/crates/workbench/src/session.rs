//! Session state machine: Referencing → Setup → Programming → Interaction.

use arcell_core::envmap::PlanningScene;
use arcell_core::kin::JointState;
use arcell_core::program::{JointTrajectory, WaypointProgram};
use arcell_core::registration::Referencing;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    Referencing,
    Setup,
    Programming,
    Interaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub stage: Stage,
    pub robot_model: String,
    /// Current robot configuration as reported by the controller.
    pub joint_state: JointState,
    pub referencing: Option<Referencing>,
    pub scene: Option<PlanningScene>,
    pub program: Option<WaypointProgram>,
    pub trajectory: Option<JointTrajectory>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// A converged referencing, first or repeated.
    Referenced(Referencing),
    /// Planning scene built from the spatial mesh, or edited.
    SceneReady(PlanningScene),
    ProgramEdited(WaypointProgram),
    Planned(JointTrajectory),
    /// The robot moved, e.g. through hand guidance.
    Moved(JointState),
}

impl Event {
    fn name(&self) -> &'static str {
        match self {
            Event::Referenced(_) => "reference",
            Event::SceneReady(_) => "map",
            Event::ProgramEdited(_) => "program",
            Event::Planned(_) => "plan",
            Event::Moved(_) => "guidance",
        }
    }
}

impl SessionState {
    pub fn new(robot_model: impl Into<String>, joint_state: JointState) -> Self {
        Self {
            stage: Stage::Referencing,
            robot_model: robot_model.into(),
            joint_state,
            referencing: None,
            scene: None,
            program: None,
            trajectory: None,
        }
    }

    /// Fails with a stage violation naming the first missing artifact unless the session
    /// has reached `required`.
    pub fn require(&self, action: &'static str, required: Stage) -> Result<()> {
        let missing = if required >= Stage::Setup && self.referencing.is_none() {
            Some("referencing")
        } else if required >= Stage::Programming && self.scene.is_none() {
            Some("scene")
        } else if required >= Stage::Interaction && self.trajectory.is_none() {
            Some("trajectory")
        } else {
            None
        };
        match missing {
            Some(missing) => Err(Error::StageViolation { action, required, current: self.stage, missing }),
            None => Ok(()),
        }
    }

    /// Applies `event` in place; on error the state is unchanged.
    pub fn apply(&mut self, event: Event) -> Result<()> {
        let action = event.name();
        match event {
            Event::Referenced(new) => {
                if !new.quality.converged {
                    return Err(arcell_core::Error::ReferencingRejected(Box::new(new.quality)).into());
                }
                if let Some(old) = &self.referencing {
                    // maps coordinates in the old robot frame to the new one
                    let delta = new.robot_from_world.compose(&old.world_from_robot());
                    if let Some(scene) = &mut self.scene {
                        scene.octree = scene.octree.transformed(&delta);
                        scene.zones = scene.zones.iter().map(|z| z.transformed(&delta)).collect();
                        scene.referencing = new.clone();
                    }
                    if let Some(program) = &mut self.program {
                        for w in &mut program.waypoints {
                            w.target = delta.compose(&w.target);
                        }
                    }
                }
                self.referencing = Some(new);
                self.trajectory = None;
                self.stage = Stage::Setup;
            }
            Event::SceneReady(mut scene) => {
                self.require(action, Stage::Setup)?;
                scene.validate()?;
                scene.referencing = self.referencing.clone().expect("checked above");
                self.scene = Some(scene);
                self.trajectory = None;
                self.stage = Stage::Programming;
            }
            Event::ProgramEdited(program) => {
                self.require(action, Stage::Programming)?;
                program.validate()?;
                self.program = Some(program);
                self.trajectory = None;
                self.stage = Stage::Programming;
            }
            Event::Planned(traj) => {
                self.require(action, Stage::Programming)?;
                if self.program.is_none() {
                    return Err(Error::StageViolation {
                        action,
                        required: Stage::Programming,
                        current: self.stage,
                        missing: "program",
                    });
                }
                self.trajectory = Some(traj);
                self.stage = Stage::Interaction;
            }
            Event::Moved(q) => {
                self.require(action, Stage::Setup)?;
                if q.len() != self.joint_state.len() {
                    return Err(arcell_core::Error::InvalidConfiguration(format!(
                        "expected {} joints, got {}",
                        self.joint_state.len(),
                        q.len()
                    ))
                    .into());
                }
                if q != self.joint_state {
                    self.joint_state = q;
                    if self.trajectory.take().is_some() {
                        self.stage = Stage::Programming;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Returns the session after `event`.
pub fn advance_stage(session: &SessionState, event: Event) -> Result<SessionState> {
    let mut next = session.clone();
    next.apply(event)?;
    Ok(next)
}
