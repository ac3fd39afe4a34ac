use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::universe::{DISC, ITEM, PEG, REGION, ROBOT};
use super::Task;
use crate::logic::{GroundAtom, GroundLiteral, LogicalState, Problem};

const R: &str = "r";
const TABLE: &str = "table";

fn atom(p: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(p, args)
}

struct Builder {
    objects: BTreeMap<String, String>,
    init: LogicalState,
    goal: BTreeSet<GroundLiteral>,
}

impl Builder {
    fn new() -> Self {
        Builder { objects: BTreeMap::new(), init: LogicalState::new(), goal: BTreeSet::new() }
    }

    fn object(&mut self, name: &str, ty: &str) {
        self.objects.insert(name.into(), ty.into());
    }

    fn init(&mut self, p: &str, args: &[&str]) {
        self.init.insert(atom(p, args));
    }

    fn goal(&mut self, p: &str, args: &[&str]) {
        self.goal.insert(GroundLiteral::pos(atom(p, args)));
    }

    fn robot(&mut self) {
        self.object(R, ROBOT);
        self.init("handempty", &[R]);
    }

    /// `n` items, shuffled so names carry no structural information.
    fn items(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut names: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
        names.shuffle(rng);
        for x in &names {
            self.object(x, ITEM);
        }
        names
    }

    fn on_table(&mut self, x: &str, region: &str) {
        self.init("on_table", &[x]);
        self.init("clear", &[x]);
        self.init("at_region", &[x, region]);
    }

    /// Random towers over `items`, at least one of height two or more; a
    /// single tower when `single`.
    fn towers(&mut self, items: &[String], single: bool, rng: &mut ChaCha8Rng) {
        let mut towers: Vec<Vec<&str>> = Vec::new();
        for x in items {
            match towers.last_mut() {
                Some(t) if single || rng.gen_bool(0.6) => t.push(x),
                _ => towers.push(vec![x]),
            }
        }
        if towers.iter().all(|t| t.len() < 2) {
            let b = towers.pop().unwrap();
            towers.last_mut().unwrap().extend(b);
        }
        for t in towers {
            self.init("on_table", &[t[0]]);
            self.init("at_region", &[t[0], TABLE]);
            for w in t.windows(2) {
                self.init("on", &[w[1], w[0]]);
            }
            self.init("clear", &[t[t.len() - 1]]);
        }
    }

    fn finish(self) -> Problem {
        Problem { name: String::new(), domain: "universe".into(), objects: self.objects, init: self.init, goal: self.goal }
    }
}

/// A random non-empty subset of `items` of size at least `min(n, 2)`.
fn needs_work<'a>(items: &'a [String], rng: &mut ChaCha8Rng) -> (&'a [String], &'a [String]) {
    let lo = items.len().min(2);
    let k = rng.gen_range(lo..=items.len());
    items.split_at(k)
}

fn chores(b: &mut Builder, items: &[String], preds: &[&str], rng: &mut ChaCha8Rng) {
    let (todo, done) = needs_work(items, rng);
    for x in todo {
        for p in preds {
            b.goal(p, &[x]);
        }
    }
    for x in done {
        for p in preds {
            b.init(p, &[x]);
        }
    }
}

fn tower_goal(b: &mut Builder, items: &[String], rng: &mut ChaCha8Rng) {
    let mut order = items.to_vec();
    order.shuffle(rng);
    for w in order.windows(2) {
        b.goal("on", &[&w[1], &w[0]]);
    }
}

/// A random problem; `demo` asks for the configuration shown in
/// demonstrations, where piles are a single tower.
pub(super) fn generate(task: Task, count: usize, demo: bool, rng: &mut ChaCha8Rng) -> Problem {
    let mut b = Builder::new();
    if task == Task::Hanoi {
        hanoi(&mut b, count - 3, rng);
        return b.finish();
    }
    b.robot();
    b.object(TABLE, REGION);
    let items = b.items(count, rng);
    match task {
        Task::Stacking => {
            for x in &items {
                b.on_table(x, TABLE);
            }
            tower_goal(&mut b, &items, rng);
        }
        Task::Unstacking => {
            b.towers(&items, demo, rng);
            for x in &items {
                b.goal("on_table", &[x]);
            }
        }
        Task::Sorting => {
            b.object("left", REGION);
            b.object("right", REGION);
            let sides = ["left", "right"];
            let (moved, stay) = needs_work(&items, rng);
            for x in moved {
                let from = rng.gen_range(0..2);
                b.on_table(x, sides[from]);
                b.goal("at_region", &[x, sides[1 - from]]);
            }
            for x in stay {
                let side = sides[rng.gen_range(0..2)];
                b.on_table(x, side);
                b.goal("at_region", &[x, side]);
            }
            for x in &items {
                if rng.gen_bool(0.5) {
                    b.init("cleaned", &[x]);
                }
            }
        }
        Task::Washing | Task::Grilling | Task::Cooking | Task::TableCleaning | Task::Painting => {
            for x in &items {
                b.on_table(x, TABLE);
            }
            let preds: &[&str] = match task {
                Task::Washing => &["cleaned"],
                Task::Grilling => &["cooked"],
                Task::Cooking => &["cleaned", "cooked"],
                Task::TableCleaning => &["in_bin"],
                _ => &["painted"],
            };
            chores(&mut b, &items, preds, rng);
        }
        Task::UnpackAndCook => {
            b.towers(&items, demo, rng);
            for x in &items {
                b.goal("on_table", &[x]);
                b.goal("cleaned", &[x]);
                b.goal("cooked", &[x]);
            }
        }
        Task::CookAndPlate => {
            for x in &items {
                b.on_table(x, TABLE);
                b.goal("cleaned", &[x]);
                b.goal("cooked", &[x]);
            }
            tower_goal(&mut b, &items, rng);
        }
        Task::Labeling => {
            b.towers(&items, demo, rng);
            for x in &items {
                b.goal("on_table", &[x]);
                b.goal("labeled", &[x]);
            }
        }
        Task::Hanoi => unreachable!(),
    }
    b.finish()
}

fn hanoi(b: &mut Builder, discs: usize, rng: &mut ChaCha8Rng) {
    let pegs = ["p1", "p2", "p3"];
    let d: Vec<String> = (1..=discs).map(|i| format!("d{i}")).collect();
    for p in pegs {
        b.object(p, PEG);
    }
    for x in &d {
        b.object(x, DISC);
    }
    let mut order = pegs;
    order.shuffle(rng);
    let (src, dst) = (order[0], order[1]);
    for (i, x) in d.iter().enumerate() {
        for y in &d[i + 1..] {
            b.init("smaller", &[x, y]);
        }
        for p in pegs {
            b.init("smaller", &[x, p]);
        }
    }
    for w in d.windows(2) {
        b.init("on", &[&w[0], &w[1]]);
        b.goal("on", &[&w[0], &w[1]]);
    }
    let largest = &d[discs - 1];
    b.init("on", &[largest, src]);
    b.goal("on", &[largest, dst]);
    b.init("clear", &[&d[0]]);
    for p in pegs.iter().filter(|p| **p != src) {
        b.init("clear", &[p]);
    }
}
