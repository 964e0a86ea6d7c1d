//! Synthetic production data for the shop-floor skills used in tests and
//! demos.
//!
//! Each fixture carries the background vocabulary, a log, the column
//! mapping and the hand-written ground-truth descriptions of its target
//! skill. Generation is deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{apply_log, LogRow, MappingConfig, MappingEntry, TargetResolution, SKILL_ROOT};
use crate::error::{Error, Result};
use crate::evaluate::GroundTruth;
use crate::kb::{ClassId, KnowledgeBase, KnowledgeBuilder, PropertyId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FixtureName {
    AssemblyModule1,
    AssemblyModule2Hard,
    DismantleModule3,
    ChargeModule4,
}

impl FixtureName {
    pub const ALL: [FixtureName; 4] = [
        FixtureName::AssemblyModule1,
        FixtureName::AssemblyModule2Hard,
        FixtureName::DismantleModule3,
        FixtureName::ChargeModule4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureName::AssemblyModule1 => "assembly-module1",
            FixtureName::AssemblyModule2Hard => "assembly-module2-hard",
            FixtureName::DismantleModule3 => "dismantle-module3",
            FixtureName::ChargeModule4 => "charge-module4",
        }
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_owned()))
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: FixtureName,
    pub skill: ClassId,
    pub module: ClassId,
    pub background: KnowledgeBase,
    pub rows: Vec<LogRow>,
    pub extra_columns: Vec<String>,
    pub mapping: MappingConfig,
    /// Ground-truth descriptions in Manchester syntax.
    pub ground_truth: Vec<String>,
}

impl Fixture {
    pub fn log_csv(&self) -> String {
        let cols: Vec<&str> = self.extra_columns.iter().map(String::as_str).collect();
        super::write_log(&self.rows, &cols)
    }

    /// Background plus one individual per logged operation.
    pub fn knowledge_base(&self) -> Result<KnowledgeBase> {
        let rows: Vec<(u64, LogRow)> =
            self.rows.iter().cloned().enumerate().map(|(i, r)| (i as u64 + 2, r)).collect();
        apply_log(&self.background, &rows, &self.mapping)
    }

    pub fn ground_truth_text(&self) -> String {
        let mut s = format!("# ground truth for {}\n", self.skill);
        for line in &self.ground_truth {
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn parsed_ground_truth(&self, kb: &KnowledgeBase) -> Result<GroundTruth> {
        GroundTruth::parse(self.skill.clone(), &self.ground_truth_text(), kb)
    }

    /// Writes `kb.json` (background only), `logs.csv`, `mapping.json` and
    /// `gt.mos` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("kb.json", super::kb_to_json(&self.background)),
            ("logs.csv", self.log_csv()),
            ("mapping.json", self.mapping.to_json()),
            ("gt.mos", self.ground_truth_text()),
        ];
        for (name, content) in files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

const SKILLS: [(&str, &str); 4] = [
    ("AssembleItemByModule1", "Module1"),
    ("AssembleItemByModule2", "Module2"),
    ("DismantleProductByModule3", "Module3"),
    ("ChargeProductBaseByModule4", "Module4"),
];

const MATERIALS: [(&str, &str); 6] = [
    ("MaterialProductBase", "mpb"),
    ("BottomPart", "bp"),
    ("HeadPart", "hp"),
    ("PartType1", "pt1"),
    ("PartType2", "pt2"),
    ("PartType3", "pt3"),
];

const POSITIONS: [&str; 5] = ["pos1", "pos2", "pos3", "pos4", "pos5"];

/// A parameter every operation carries with the same value.
struct Constant {
    column: &'static str,
    property: &'static str,
    class: &'static str,
}

struct Recipe {
    skill: &'static str,
    positives: usize,
    pos_materials: &'static [&'static str],
    pos_positions: &'static [&'static str],
    pos_orientations: &'static [&'static str],
    negatives: [usize; 3],
    neg_materials: &'static [&'static str],
    neg_positions: &'static [&'static str],
    neg_orientations: &'static [&'static str],
    constants: &'static [Constant],
    ground_truth: &'static [&'static str],
}

fn recipe(name: FixtureName) -> Recipe {
    match name {
        FixtureName::AssemblyModule1 => Recipe {
            skill: "AssembleItemByModule1",
            positives: 20,
            pos_materials: &["MaterialProductBase", "BottomPart"],
            pos_positions: &["pos1", "pos2"],
            pos_orientations: &["0", "180"],
            negatives: [10, 10, 9],
            neg_materials: &["HeadPart"],
            neg_positions: &["pos3"],
            neg_orientations: &["0", "180"],
            constants: &[],
            ground_truth: &[
                "involvesMaterial only (MaterialProductBase or BottomPart)",
                "hasPositionParam only (pos1 or pos2)",
                "hasOrientationParam only (hundredeighty or zero)",
            ],
        },
        FixtureName::AssemblyModule2Hard => Recipe {
            skill: "AssembleItemByModule2",
            positives: 20,
            pos_materials: &["BottomPart", "HeadPart"],
            pos_positions: &["pos2", "pos3"],
            pos_orientations: &["0", "180"],
            negatives: [10, 10, 9],
            neg_materials: &["PartType1"],
            neg_positions: &["pos5"],
            neg_orientations: &["0", "180"],
            constants: &[
                Constant { column: "Gripper", property: "hasGripperParam", class: "StandardGripper" },
                Constant { column: "Speed", property: "hasSpeedParam", class: "NormalSpeed" },
            ],
            ground_truth: &[
                "involvesMaterial only (BottomPart or HeadPart)",
                "hasPositionParam only (pos2 or pos3)",
                "hasOrientationParam only (hundredeighty or zero)",
            ],
        },
        FixtureName::DismantleModule3 => Recipe {
            skill: "DismantleProductByModule3",
            positives: 12,
            pos_materials: &["HeadPart", "PartType1"],
            pos_positions: &["pos3", "pos4"],
            pos_orientations: &["0"],
            negatives: [8, 8, 8],
            neg_materials: &["MaterialProductBase"],
            neg_positions: &["pos1"],
            neg_orientations: &["0", "180"],
            constants: &[],
            ground_truth: &[
                "involvesMaterial only (HeadPart or PartType1)",
                "hasPositionParam only (pos3 or pos4)",
            ],
        },
        FixtureName::ChargeModule4 => Recipe {
            skill: "ChargeProductBaseByModule4",
            positives: 15,
            pos_materials: &["MaterialProductBase"],
            pos_positions: &["pos5"],
            pos_orientations: &["0"],
            negatives: [10, 10, 10],
            neg_materials: &["PartType2"],
            neg_positions: &["pos4"],
            neg_orientations: &["180"],
            constants: &[],
            ground_truth: &[
                "involvesMaterial only MaterialProductBase",
                "hasPositionParam only pos5",
                "hasOrientationParam only zero",
            ],
        },
    }
}

fn background(constants: &[Constant]) -> Result<KnowledgeBase> {
    let none: [&str; 0] = [];
    let mut b = KnowledgeBuilder::new();
    b.class(SKILL_ROOT, none);
    b.class("Module", none);
    for (skill, module) in SKILLS {
        b.class(skill, [SKILL_ROOT]);
        b.class(module, ["Module"]);
    }
    b.class("Material", none);
    for (class, prefix) in MATERIALS {
        b.class(class, ["Material"]);
        for i in 1..=2 {
            b.individual(&format!("{prefix}-{i}"), [class]);
        }
    }
    for class in POSITIONS.iter().chain(&["zero", "hundredeighty"]) {
        b.class(class, none);
    }
    for p in ["involvesMaterial", "hasPositionParam", "hasOrientationParam"] {
        b.property(p);
    }
    for c in constants {
        b.class(c.class, none);
        b.property(c.property);
    }
    b.build()
}

fn mapping(constants: &[Constant]) -> MappingConfig {
    let aliases = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    };
    let positions: Vec<(String, &str)> =
        POSITIONS.iter().enumerate().map(|(i, p)| (format!("Position{}", i + 1), *p)).collect();
    let positions: Vec<(&str, &str)> = positions.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut entries = vec![
        MappingEntry {
            column: "Material".into(),
            property: PropertyId::from("involvesMaterial"),
            target: TargetResolution::IndividualByName,
            values: BTreeMap::new(),
        },
        MappingEntry {
            column: "PositionParam".into(),
            property: PropertyId::from("hasPositionParam"),
            target: TargetResolution::CanonicalIndividualOfClass,
            values: aliases(&positions),
        },
        MappingEntry {
            column: "OrientationParam".into(),
            property: PropertyId::from("hasOrientationParam"),
            target: TargetResolution::CanonicalIndividualOfClass,
            values: aliases(&[("0", "zero"), ("180", "hundredeighty")]),
        },
    ];
    entries.extend(constants.iter().map(|c| MappingEntry {
        column: c.column.into(),
        property: PropertyId::from(c.property),
        target: TargetResolution::CanonicalIndividualOfClass,
        values: BTreeMap::new(),
    }));
    MappingConfig { entries }
}

fn material_individual(class: &str, k: usize) -> String {
    let prefix = MATERIALS.iter().find(|(c, _)| *c == class).expect("known material").1;
    format!("{prefix}-{}", k % 2 + 1)
}

fn position_label(class: &str) -> String {
    let i = POSITIONS.iter().position(|p| *p == class).expect("known position");
    format!("Position{}", i + 1)
}

fn timestamp(seq: usize) -> String {
    let secs = 8 * 3600 + seq * 97;
    format!("2020-03-02T{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

/// Builds the named fixture.
pub fn generate_fixture(name: FixtureName) -> Result<Fixture> {
    let r = recipe(name);
    let (_, module) = SKILLS.iter().find(|(s, _)| *s == r.skill).copied().expect("known skill");

    // (skill, module, count, materials, positions, orientations)
    let mut groups = vec![(r.skill, module, r.positives, r.pos_materials, r.pos_positions, r.pos_orientations)];
    let others = SKILLS.iter().filter(|(s, _)| *s != r.skill);
    for ((skill, module), count) in others.zip(r.negatives) {
        groups.push((skill, module, count, r.neg_materials, r.neg_positions, r.neg_orientations));
    }

    let mut rows = Vec::new();
    for (skill, module, count, materials, positions, orientations) in groups {
        for k in 0..count {
            let seq = rows.len();
            let mut extras = BTreeMap::new();
            let material = materials[k % materials.len()];
            extras.insert("Material".to_owned(), material_individual(material, k / materials.len()));
            let position = positions[(k / 2) % positions.len()];
            extras.insert("PositionParam".to_owned(), position_label(position));
            let orientation = orientations[(k / 4 + k) % orientations.len()];
            extras.insert("OrientationParam".to_owned(), orientation.to_owned());
            for c in r.constants {
                extras.insert(c.column.to_owned(), c.class.to_owned());
            }
            rows.push(LogRow {
                operation_id: format!("I-{:06}-ex", 17573 + seq),
                module: ClassId::from(module),
                skill: ClassId::from(skill),
                timestamp: timestamp(seq),
                duration: 10.0 + (seq % 7) as f64 * 1.5,
                extras,
            });
        }
    }

    let mut extra_columns: Vec<String> =
        ["Material", "PositionParam", "OrientationParam"].map(String::from).to_vec();
    extra_columns.extend(r.constants.iter().map(|c| c.column.to_owned()));

    Ok(Fixture {
        name,
        skill: ClassId::from(r.skill),
        module: ClassId::from(module),
        background: background(r.constants)?,
        rows,
        extra_columns,
        mapping: mapping(r.constants),
        ground_truth: r.ground_truth.iter().map(|s| s.to_string()).collect(),
    })
}
