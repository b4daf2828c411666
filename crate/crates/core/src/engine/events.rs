use serde::{Deserialize, Serialize};

use super::Pos;

pub const MECHANIC_COUNT: usize = 17;

/// The tracked game mechanics. The discriminant is the feature-vector index
/// and must never be reordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanicKind {
    EnemyKill = 0,
    GoblinHit = 1,
    MinitaurHit = 2,
    GoblinWizardHit = 3,
    BlobHit = 4,
    OgreHit = 5,
    OgreTreasure = 6,
    BlobPotion = 7,
    BlobCombine = 8,
    JavelinThrow = 9,
    CollectTreasure = 10,
    ConsumePotion = 11,
    TriggerTrap = 12,
    UsePortal = 13,
    EndTurn = 14,
    Die = 15,
    ReachStairs = 16,
}

impl MechanicKind {
    pub const ALL: [MechanicKind; MECHANIC_COUNT] = [
        MechanicKind::EnemyKill,
        MechanicKind::GoblinHit,
        MechanicKind::MinitaurHit,
        MechanicKind::GoblinWizardHit,
        MechanicKind::BlobHit,
        MechanicKind::OgreHit,
        MechanicKind::OgreTreasure,
        MechanicKind::BlobPotion,
        MechanicKind::BlobCombine,
        MechanicKind::JavelinThrow,
        MechanicKind::CollectTreasure,
        MechanicKind::ConsumePotion,
        MechanicKind::TriggerTrap,
        MechanicKind::UsePortal,
        MechanicKind::EndTurn,
        MechanicKind::Die,
        MechanicKind::ReachStairs,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            MechanicKind::EnemyKill => "enemy_kill",
            MechanicKind::GoblinHit => "goblin_hit",
            MechanicKind::MinitaurHit => "minitaur_hit",
            MechanicKind::GoblinWizardHit => "goblin_wizard_hit",
            MechanicKind::BlobHit => "blob_hit",
            MechanicKind::OgreHit => "ogre_hit",
            MechanicKind::OgreTreasure => "ogre_treasure",
            MechanicKind::BlobPotion => "blob_potion",
            MechanicKind::BlobCombine => "blob_combine",
            MechanicKind::JavelinThrow => "javelin_throw",
            MechanicKind::CollectTreasure => "collect_treasure",
            MechanicKind::ConsumePotion => "consume_potion",
            MechanicKind::TriggerTrap => "trigger_trap",
            MechanicKind::UsePortal => "use_portal",
            MechanicKind::EndTurn => "end_turn",
            MechanicKind::Die => "die",
            MechanicKind::ReachStairs => "reach_stairs",
        }
    }
}

/// One triggered mechanic. `turn` is the index of the action that caused it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MechanicEvent {
    pub kind: MechanicKind,
    pub turn: u32,
    pub subject: Pos,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_is_stable() {
        for (i, kind) in MechanicKind::ALL.iter().enumerate() {
            assert_eq!(kind.index(), i);
        }
        assert_eq!(MechanicKind::EndTurn.index(), 14);
        assert_eq!(MechanicKind::ReachStairs.index(), 16);
    }

    #[test]
    fn names_match_serde() {
        for kind in MechanicKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
    }
}
