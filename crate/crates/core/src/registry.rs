//! Catalog of activity and editor metadata, persisted as one XML file.
//!
//! `docs/catalog-format.md` describes the file. Writes go through a single
//! lock and replace the file atomically; readers get consistent snapshots.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{keyword_enum, Grain};
use crate::xml::{self, Element, Mode, XmlError};

keyword_enum!(AdaptationLevel {
    InterfaceOnly => "interface-only",
    Template => "template",
    SourceAccess => "source-access",
});

keyword_enum!(ProgrammingKnowledge {
    None => "none",
    Scripting => "scripting",
    Programmer => "programmer",
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityDescriptor {
    pub id: String,
    pub name: String,
    pub grain: Grain,
    pub kind: String,
    #[serde(default)]
    pub use_characteristics: String,
    #[serde(default)]
    pub objectives_addressed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditorDescriptor {
    pub id: String,
    pub name: String,
    pub applicable_kinds: Vec<String>,
    pub adaptation_level: AdaptationLevel,
    pub min_programming_knowledge: ProgrammingKnowledge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub programming_knowledge: ProgrammingKnowledge,
    pub desired_adaptation: AdaptationLevel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivityFilter {
    pub grain: Option<Grain>,
    pub kind: Option<String>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{what} `{id}` is already registered")]
    Duplicate { what: &'static str, id: String },
    #[error("editor `{0}` has no applicable activity kind")]
    NoKinds(String),
    #[error("{0} id must not be empty")]
    EmptyId(&'static str),
    #[error("catalog {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("catalog {path}: {message}")]
    Format { path: String, message: String },
}

/// The registry contents as a plain value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    pub activities: BTreeMap<String, ActivityDescriptor>,
    pub editors: BTreeMap<String, EditorDescriptor>,
}

impl Catalog {
    pub fn register_activity(&mut self, d: ActivityDescriptor) -> Result<String, RegistryError> {
        if d.id.is_empty() {
            return Err(RegistryError::EmptyId("activity"));
        }
        if self.activities.contains_key(&d.id) {
            return Err(RegistryError::Duplicate { what: "activity", id: d.id });
        }
        let id = d.id.clone();
        self.activities.insert(id.clone(), d);
        Ok(id)
    }

    pub fn register_editor(&mut self, d: EditorDescriptor) -> Result<String, RegistryError> {
        if d.id.is_empty() {
            return Err(RegistryError::EmptyId("editor"));
        }
        if self.editors.contains_key(&d.id) {
            return Err(RegistryError::Duplicate { what: "editor", id: d.id });
        }
        if d.applicable_kinds.is_empty() {
            return Err(RegistryError::NoKinds(d.id));
        }
        let id = d.id.clone();
        self.editors.insert(id.clone(), d);
        Ok(id)
    }

    /// Editors for `kind` the expert can use, closest adaptation level first,
    /// ties broken by id.
    pub fn find_editors(&self, kind: &str, expert: ExpertProfile) -> Vec<EditorDescriptor> {
        let mut found: Vec<&EditorDescriptor> = self
            .editors
            .values()
            .filter(|e| e.applicable_kinds.iter().any(|k| k == kind))
            .filter(|e| e.min_programming_knowledge <= expert.programming_knowledge)
            .collect();
        let distance = |e: &EditorDescriptor| (e.adaptation_level as i32 - expert.desired_adaptation as i32).abs();
        found.sort_by(|a, b| distance(a).cmp(&distance(b)).then_with(|| a.id.cmp(&b.id)));
        found.into_iter().cloned().collect()
    }

    pub fn list_activities(&self, filter: &ActivityFilter) -> Vec<ActivityDescriptor> {
        self.activities
            .values()
            .filter(|a| filter.grain.is_none_or(|g| a.grain == g))
            .filter(|a| filter.kind.as_deref().is_none_or(|k| a.kind == k))
            .cloned()
            .collect()
    }

    pub fn to_xml(&self) -> String {
        let mut activities = Element::new("activities");
        for a in self.activities.values() {
            let mut el = Element::new("activity")
                .with_attr("id", &a.id)
                .with_attr("name", &a.name)
                .with_attr("grain", a.grain.as_str())
                .with_attr("kind", &a.kind)
                .with_attr("use", &a.use_characteristics);
            for o in &a.objectives_addressed {
                el.push_child(Element::new("objective").with_attr("id", o));
            }
            activities.push_child(el);
        }
        let mut editors = Element::new("editors");
        for e in self.editors.values() {
            let mut el = Element::new("editor")
                .with_attr("id", &e.id)
                .with_attr("name", &e.name)
                .with_attr("adaptation", e.adaptation_level.as_str())
                .with_attr("knowledge", e.min_programming_knowledge.as_str());
            for k in &e.applicable_kinds {
                el.push_child(Element::new("kind").with_attr("name", k));
            }
            editors.push_child(el);
        }
        let mut root = Element::new("catalog");
        root.push_child(activities);
        root.push_child(editors);
        xml::write_document(&root)
    }

    pub fn from_xml(bytes: &[u8]) -> Result<Catalog, RegistryError> {
        let doc = xml::parse(bytes, Mode::Strict)?;
        if doc.root.name != "catalog" {
            return Err(format_err("/", format!("expected <catalog>, found <{}>", doc.root.name)));
        }
        let mut catalog = Catalog::default();
        for section in doc.root.elements() {
            match section.name.as_str() {
                "activities" => {
                    for (i, a) in section.elements().filter(|e| e.name == "activity").enumerate() {
                        let path = format!("/catalog/activities/activity[{}]", i + 1);
                        let d = ActivityDescriptor {
                            id: attr(a, &path, "id")?.to_string(),
                            name: a.attr("name").unwrap_or_default().to_string(),
                            grain: keyword(a, &path, "grain")?,
                            kind: attr(a, &path, "kind")?.to_string(),
                            use_characteristics: a.attr("use").unwrap_or_default().to_string(),
                            objectives_addressed: a
                                .elements()
                                .filter(|c| c.name == "objective")
                                .map(|c| attr(c, &path, "id").map(str::to_string))
                                .collect::<Result<_, _>>()?,
                        };
                        catalog.register_activity(d)?;
                    }
                }
                "editors" => {
                    for (i, e) in section.elements().filter(|e| e.name == "editor").enumerate() {
                        let path = format!("/catalog/editors/editor[{}]", i + 1);
                        let d = EditorDescriptor {
                            id: attr(e, &path, "id")?.to_string(),
                            name: e.attr("name").unwrap_or_default().to_string(),
                            applicable_kinds: e
                                .elements()
                                .filter(|c| c.name == "kind")
                                .map(|c| attr(c, &path, "name").map(str::to_string))
                                .collect::<Result<_, _>>()?,
                            adaptation_level: keyword(e, &path, "adaptation")?,
                            min_programming_knowledge: keyword(e, &path, "knowledge")?,
                        };
                        catalog.register_editor(d)?;
                    }
                }
                other => return Err(format_err("/catalog", format!("unknown section <{other}>"))),
            }
        }
        Ok(catalog)
    }
}

fn format_err(path: &str, message: String) -> RegistryError {
    RegistryError::Format {
        path: path.to_string(),
        message,
    }
}

fn attr<'a>(el: &'a Element, path: &str, name: &str) -> Result<&'a str, RegistryError> {
    el.attr(name)
        .ok_or_else(|| format_err(path, format!("missing attribute `{name}`")))
}

fn keyword<T: FromStr<Err = String>>(el: &Element, path: &str, name: &str) -> Result<T, RegistryError> {
    attr(el, path, name)?
        .parse()
        .map_err(|e| format_err(&format!("{path}/@{name}"), e))
}

/// Shared, optionally file-backed catalog.
#[derive(Debug, Default)]
pub struct Registry {
    catalog: RwLock<Catalog>,
    path: Option<PathBuf>,
}

impl Registry {
    pub fn in_memory(catalog: Catalog) -> Self {
        Registry {
            catalog: RwLock::new(catalog),
            path: None,
        }
    }

    /// Opens the catalog file at `path`, starting empty if it does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let path = path.into();
        let catalog = match fs::read(&path) {
            Ok(bytes) => Catalog::from_xml(&bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Catalog::default(),
            Err(source) => return Err(RegistryError::Io { path, source }),
        };
        Ok(Registry {
            catalog: RwLock::new(catalog),
            path: Some(path),
        })
    }

    pub fn snapshot(&self) -> Catalog {
        self.catalog.read().clone()
    }

    pub fn register_activity(&self, d: ActivityDescriptor) -> Result<String, RegistryError> {
        self.update(|c| c.register_activity(d))
    }

    pub fn register_editor(&self, d: EditorDescriptor) -> Result<String, RegistryError> {
        self.update(|c| c.register_editor(d))
    }

    pub fn find_editors(&self, kind: &str, expert: ExpertProfile) -> Vec<EditorDescriptor> {
        self.catalog.read().find_editors(kind, expert)
    }

    pub fn list_activities(&self, filter: &ActivityFilter) -> Vec<ActivityDescriptor> {
        self.catalog.read().list_activities(filter)
    }

    fn update<T>(&self, f: impl FnOnce(&mut Catalog) -> Result<T, RegistryError>) -> Result<T, RegistryError> {
        let mut guard = self.catalog.write();
        let mut next = guard.clone();
        let out = f(&mut next)?;
        if let Some(path) = &self.path {
            write_atomically(path, next.to_xml().as_bytes())?;
        }
        *guard = next;
        Ok(out)
    }
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), RegistryError> {
    let io_err = |source| RegistryError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err)?;
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}
