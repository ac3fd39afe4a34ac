//! The shared predicate/action universe with its reference ("world") schemas.

use crate::logic::{ActionSchema, Domain, LiftedLiteral, PredicateSchema, OBJECT_TYPE};

pub const ITEM: &str = "item";
pub const ROBOT: &str = "robot";
pub const REGION: &str = "region";
pub const DISC: &str = "disc";
pub const PEG: &str = "peg";

fn l(p: &str, a: &[&str]) -> LiftedLiteral {
    LiftedLiteral::pos(p, a)
}

/// Every predicate and action any task uses, with the schemas that define
/// how the simulated world actually behaves.
pub fn universe() -> Domain {
    let mut d = Domain::new("universe");
    d.types.extend([DISC, ITEM, PEG, REGION, ROBOT].map(String::from));
    for p in [
        PredicateSchema::new("on", &[OBJECT_TYPE, OBJECT_TYPE]),
        PredicateSchema::new("on_table", &[ITEM]),
        PredicateSchema::new("clear", &[OBJECT_TYPE]),
        PredicateSchema::new("holding", &[ROBOT, ITEM]),
        PredicateSchema::new("handempty", &[ROBOT]),
        PredicateSchema::new("cleaned", &[ITEM]),
        PredicateSchema::new("cooked", &[ITEM]),
        PredicateSchema::new("in_bin", &[ITEM]),
        PredicateSchema::new("at_region", &[ITEM, REGION]),
        PredicateSchema::new("painted", &[ITEM]),
        PredicateSchema::new("labeled", &[ITEM]),
        PredicateSchema::new("smaller", &[DISC, OBJECT_TYPE]),
    ] {
        d.add_predicate(p);
    }
    let rx = [("?r", ROBOT), ("?x", ITEM)];
    d.add_action(
        ActionSchema::new("pick", &[("?r", ROBOT), ("?x", ITEM), ("?g", REGION)])
            .with_pre([l("handempty", &["?r"]), l("clear", &["?x"]), l("on_table", &["?x"]), l("at_region", &["?x", "?g"])])
            .with_add([l("holding", &["?r", "?x"])])
            .with_del([l("handempty", &["?r"]), l("clear", &["?x"]), l("on_table", &["?x"]), l("at_region", &["?x", "?g"])]),
    );
    d.add_action(
        ActionSchema::new("place", &[("?r", ROBOT), ("?x", ITEM), ("?g", REGION)])
            .with_pre([l("holding", &["?r", "?x"])])
            .with_add([l("on_table", &["?x"]), l("clear", &["?x"]), l("handempty", &["?r"]), l("at_region", &["?x", "?g"])])
            .with_del([l("holding", &["?r", "?x"])]),
    );
    d.add_action(
        ActionSchema::new("stack", &[("?r", ROBOT), ("?x", ITEM), ("?y", ITEM)])
            .with_pre([l("holding", &["?r", "?x"]), l("clear", &["?y"])])
            .with_add([l("on", &["?x", "?y"]), l("clear", &["?x"]), l("handempty", &["?r"])])
            .with_del([l("holding", &["?r", "?x"]), l("clear", &["?y"])]),
    );
    d.add_action(
        ActionSchema::new("unstack", &[("?r", ROBOT), ("?x", ITEM), ("?y", ITEM)])
            .with_pre([l("handempty", &["?r"]), l("clear", &["?x"]), l("on", &["?x", "?y"])])
            .with_add([l("holding", &["?r", "?x"]), l("clear", &["?y"])])
            .with_del([l("handempty", &["?r"]), l("clear", &["?x"]), l("on", &["?x", "?y"])]),
    );
    d.add_action(ActionSchema::new("wash", &rx).with_pre([l("holding", &["?r", "?x"])]).with_add([l("cleaned", &["?x"])]));
    d.add_action(ActionSchema::new("grill", &rx).with_pre([l("holding", &["?r", "?x"])]).with_add([l("cooked", &["?x"])]));
    d.add_action(
        ActionSchema::new("store", &rx)
            .with_pre([l("holding", &["?r", "?x"])])
            .with_add([l("in_bin", &["?x"]), l("handempty", &["?r"])])
            .with_del([l("holding", &["?r", "?x"])]),
    );
    d.add_action(
        ActionSchema::new("paint", &rx)
            .with_pre([l("on_table", &["?x"]), l("handempty", &["?r"])])
            .with_add([l("painted", &["?x"])]),
    );
    d.add_action(
        ActionSchema::new("label", &rx).with_pre([l("on_table", &["?x"]), l("clear", &["?x"])]).with_add([l("labeled", &["?x"])]),
    );
    d.add_action(
        ActionSchema::new("move_disc", &[("?d", DISC), ("?from", OBJECT_TYPE), ("?to", OBJECT_TYPE)])
            .with_pre([l("on", &["?d", "?from"]), l("clear", &["?d"]), l("clear", &["?to"]), l("smaller", &["?d", "?to"])])
            .with_add([l("on", &["?d", "?to"]), l("clear", &["?from"])])
            .with_del([l("on", &["?d", "?from"]), l("clear", &["?to"])]),
    );
    d
}
