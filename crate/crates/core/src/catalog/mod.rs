//! Metadata catalog: operators, sites, equipment and sensors, with a global
//! sensor registry.
//!
//! Every sensor descriptor lives in its category's table and owns exactly one
//! [`SensorRegistryEntry`], whose [`SensorId`] keys the measurement store.
//! Following a sensor's links with [`Catalog::lineage`] always ends at an
//! [`Operator`].
//!
//! The whole catalog is one JSON document (see `docs/catalog-format.md`).
//! A write validates the complete candidate state, persists it with an atomic
//! file replace and only then becomes visible to readers. Nothing is ever
//! removed: [`Catalog::delete`] sets a tombstone and ids are never reused.

mod model;
mod rules;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

pub use model::*;

use crate::error::{Error, Result};
use crate::framed::{sync_dir, write_atomic_gated};
use crate::series::{now, SensorId, Timestamp};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub(crate) struct State {
    next_sensor_id: u64,
    entities: BTreeMap<EntityRef, CatalogEntity>,
    registry: BTreeMap<SensorId, SensorRegistryEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    format_version: u32,
    next_sensor_id: u64,
    #[serde(default)]
    operators: Vec<Operator>,
    #[serde(default)]
    sites: Vec<Site>,
    #[serde(default)]
    hardware: Vec<HardwareItem>,
    #[serde(default)]
    inverter_datasheets: Vec<InverterDatasheet>,
    #[serde(default)]
    pv_datasheets: Vec<PvDatasheet>,
    #[serde(default)]
    trackers: Vec<Tracker>,
    #[serde(default)]
    inverters: Vec<Inverter>,
    #[serde(default)]
    batteries: Vec<Battery>,
    #[serde(default)]
    modules: Vec<PvModule>,
    #[serde(default)]
    sensors: BTreeMap<SensorCategory, Vec<SensorDescriptor>>,
    #[serde(default)]
    registry: Vec<SensorRegistryEntry>,
}

impl State {
    fn empty() -> Self {
        Self {
            next_sensor_id: 1,
            ..Self::default()
        }
    }

    fn to_document(&self) -> Document {
        let mut doc = Document {
            format_version: FORMAT_VERSION,
            next_sensor_id: self.next_sensor_id,
            operators: vec![],
            sites: vec![],
            hardware: vec![],
            inverter_datasheets: vec![],
            pv_datasheets: vec![],
            trackers: vec![],
            inverters: vec![],
            batteries: vec![],
            modules: vec![],
            sensors: BTreeMap::new(),
            registry: self.registry.values().cloned().collect(),
        };
        for e in self.entities.values().cloned() {
            match e {
                CatalogEntity::Operator(x) => doc.operators.push(x),
                CatalogEntity::Site(x) => doc.sites.push(x),
                CatalogEntity::Hardware(x) => doc.hardware.push(x),
                CatalogEntity::InverterDatasheet(x) => doc.inverter_datasheets.push(x),
                CatalogEntity::PvDatasheet(x) => doc.pv_datasheets.push(x),
                CatalogEntity::Tracker(x) => doc.trackers.push(x),
                CatalogEntity::Inverter(x) => doc.inverters.push(x),
                CatalogEntity::Battery(x) => doc.batteries.push(x),
                CatalogEntity::PvModule(x) => doc.modules.push(x),
                CatalogEntity::Sensor(x) => doc.sensors.entry(x.category()).or_default().push(x),
            }
        }
        doc
    }

    fn from_document(doc: Document) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported catalog format version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let mut state = State {
            next_sensor_id: doc.next_sensor_id,
            ..State::default()
        };
        let sensors = doc.sensors.into_iter().flat_map(|(category, rows)| {
            rows.into_iter().map(move |d| {
                if d.category() == category {
                    Ok(CatalogEntity::Sensor(d))
                } else {
                    Err(Error::Parse(format!(
                        "{} sensor {} listed under {category}",
                        d.category(),
                        d.id
                    )))
                }
            })
        });
        let all = doc
            .operators
            .into_iter()
            .map(CatalogEntity::Operator)
            .chain(doc.sites.into_iter().map(CatalogEntity::Site))
            .chain(doc.hardware.into_iter().map(CatalogEntity::Hardware))
            .chain(
                doc.inverter_datasheets
                    .into_iter()
                    .map(CatalogEntity::InverterDatasheet),
            )
            .chain(doc.pv_datasheets.into_iter().map(CatalogEntity::PvDatasheet))
            .chain(doc.trackers.into_iter().map(CatalogEntity::Tracker))
            .chain(doc.inverters.into_iter().map(CatalogEntity::Inverter))
            .chain(doc.batteries.into_iter().map(CatalogEntity::Battery))
            .chain(doc.modules.into_iter().map(CatalogEntity::PvModule))
            .map(Ok)
            .chain(sensors);
        for e in all {
            let e = e?;
            if e.id() == 0 {
                return Err(Error::Parse(format!("{} with reserved id 0", e.kind())));
            }
            if let Some(dup) = state.entities.insert(e.entity_ref(), e) {
                return Err(Error::Duplicate(format!("{} appears twice", dup.entity_ref())));
            }
        }
        for entry in doc.registry {
            if let Some(dup) = state.registry.insert(entry.sensor_id, entry) {
                return Err(Error::Duplicate(format!("sensor id {} appears twice", dup.sensor_id)));
            }
        }
        rules::check_all(&state)?;
        Ok(state)
    }

    fn next_id(&self, kind: EntityKind) -> EntityId {
        self.entities
            .range(EntityRef::new(kind, 0)..=EntityRef::new(kind, EntityId::MAX))
            .next_back()
            .map_or(1, |(r, _)| r.id + 1)
    }

    fn entry_for(&self, r: EntityRef) -> Option<&SensorRegistryEntry> {
        let EntityKind::Sensor(category) = r.kind else {
            return None;
        };
        self.registry
            .values()
            .find(|e| e.category == category && e.category_local_id == r.id)
    }

    fn register(&mut self, mut desc: SensorDescriptor, at: Timestamp) -> Result<SensorId> {
        let kind = EntityKind::Sensor(desc.category());
        if desc.id == 0 {
            desc.id = self.next_id(kind);
        } else if self.entities.contains_key(&EntityRef::new(kind, desc.id)) {
            return Err(Error::Duplicate(format!("{kind} {} already registered", desc.id)));
        }
        desc.deleted_at = None;
        let entity = CatalogEntity::Sensor(desc);
        rules::check_entity(self, &entity)?;
        let sensor_id = SensorId(self.next_sensor_id);
        self.next_sensor_id += 1;
        self.registry.insert(
            sensor_id,
            SensorRegistryEntry {
                sensor_id,
                category: kind_category(kind),
                category_local_id: entity.id(),
                registered_at: at,
                deleted_at: None,
            },
        );
        self.entities.insert(entity.entity_ref(), entity);
        Ok(sensor_id)
    }
}

fn kind_category(kind: EntityKind) -> SensorCategory {
    match kind {
        EntityKind::Sensor(c) => c,
        _ => unreachable!("not a sensor kind"),
    }
}

/// Narrows [`Catalog::list_sensors`]. The default matches every live sensor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SensorFilter {
    pub site: Option<EntityId>,
    pub category: Option<SensorCategory>,
    pub include_deleted: bool,
}

pub struct Catalog {
    path: Option<PathBuf>,
    state: RwLock<Arc<State>>,
    writer: Mutex<()>,
    fail_persist: AtomicBool,
}

impl Catalog {
    /// A catalog that lives only in memory.
    pub fn in_memory() -> Self {
        Self::with_state(None, State::empty())
    }

    /// Loads the document at `path`, or starts empty if the file does not
    /// exist yet. The file is created on the first write.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let state = match fs::read(&path) {
            Ok(bytes) => {
                let doc: Document =
                    serde_json::from_slice(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                State::from_document(doc)?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => State::empty(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self::with_state(Some(path), state))
    }

    /// Parses a catalog document without binding it to a file.
    pub fn from_json(json: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self::with_state(None, State::from_document(doc)?))
    }

    fn with_state(path: Option<PathBuf>, state: State) -> Self {
        Self {
            path,
            state: RwLock::new(Arc::new(state)),
            writer: Mutex::new(()),
            fail_persist: AtomicBool::new(false),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn snapshot(&self) -> Arc<State> {
        self.state.read().expect("catalog lock poisoned").clone()
    }

    /// Makes the next writes fail after the new document is written to a
    /// temporary file but before it replaces the old one.
    #[doc(hidden)]
    pub fn inject_persist_failure(&self, fail: bool) {
        self.fail_persist.store(fail, Ordering::SeqCst);
    }

    fn write<T>(&self, change: impl FnOnce(&mut State) -> Result<T>) -> Result<T> {
        let _w = self.writer.lock().expect("catalog writer poisoned");
        let mut next = (*self.snapshot()).clone();
        let out = change(&mut next)?;
        rules::check_all(&next)?;
        if let Some(path) = &self.path {
            let json = serde_json::to_vec_pretty(&next.to_document()).expect("catalog serializes");
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_atomic_gated(path, &json, || {
                if self.fail_persist.load(Ordering::SeqCst) {
                    Err(Error::InjectedFault("catalog persist interrupted"))
                } else {
                    Ok(())
                }
            })?;
            sync_dir(path);
        } else if self.fail_persist.load(Ordering::SeqCst) {
            return Err(Error::InjectedFault("catalog persist interrupted"));
        }
        *self.state.write().expect("catalog lock poisoned") = Arc::new(next);
        Ok(out)
    }

    /// Inserts or updates a row and returns its id. An id of `0` inserts
    /// under a fresh id. A new sensor descriptor is registered as by
    /// [`Catalog::register_sensor`]; its local id is returned.
    pub fn upsert_entity(&self, entity: CatalogEntity) -> Result<EntityId> {
        self.write(|state| {
            let mut entity = entity;
            let kind = entity.kind();
            if entity.id() == 0 {
                entity.set_id(state.next_id(kind));
            }
            let r = entity.entity_ref();
            match state.entities.get(&r) {
                Some(existing) if existing.deleted_at().is_some() => {
                    return Err(Error::Integrity(format!("{r} is deleted")));
                }
                Some(_) => {}
                None => {
                    if let CatalogEntity::Sensor(desc) = entity {
                        state.register(desc, now())?;
                        return Ok(r.id);
                    }
                }
            }
            entity.set_deleted_at(None);
            rules::check_entity(state, &entity)?;
            state.entities.insert(r, entity);
            Ok(r.id)
        })
    }

    /// Stores `descriptor` in its category table and creates its registry
    /// entry in the same write. A descriptor id of `0` picks the next local id.
    pub fn register_sensor(&self, descriptor: SensorDescriptor) -> Result<SensorId> {
        self.register_sensor_at(descriptor, now())
    }

    pub fn register_sensor_at(&self, descriptor: SensorDescriptor, registered_at: Timestamp) -> Result<SensorId> {
        self.write(|state| state.register(descriptor, registered_at))
    }

    /// Tombstones a row. Rows still referenced by live rows cannot be
    /// deleted. Deleting a sensor descriptor also retires its registry entry.
    pub fn delete(&self, target: EntityRef) -> Result<()> {
        self.write(|state| {
            let Some(existing) = state.entities.get(&target) else {
                return Err(Error::Integrity(format!("no {target}")));
            };
            if existing.deleted_at().is_some() {
                return Ok(());
            }
            if let Some(dependent) = state
                .entities
                .values()
                .find(|e| e.deleted_at().is_none() && e.references().contains(&target))
            {
                return Err(Error::Integrity(format!(
                    "{target} is still referenced by {}",
                    dependent.entity_ref()
                )));
            }
            let at = now();
            if let Some(id) = state.entry_for(target).map(|e| e.sensor_id) {
                state.registry.get_mut(&id).expect("entry exists").deleted_at = Some(at);
            }
            state
                .entities
                .get_mut(&target)
                .expect("entity exists")
                .set_deleted_at(Some(at));
            Ok(())
        })
    }

    pub fn get(&self, target: EntityRef) -> Option<CatalogEntity> {
        self.snapshot().entities.get(&target).cloned()
    }

    /// All rows of one table, tombstoned ones included, by id.
    pub fn entities(&self, kind: EntityKind) -> Vec<CatalogEntity> {
        self.snapshot()
            .entities
            .range(EntityRef::new(kind, 0)..=EntityRef::new(kind, EntityId::MAX))
            .map(|(_, e)| e.clone())
            .collect()
    }

    pub fn registry_entry(&self, sensor: SensorId) -> Option<SensorRegistryEntry> {
        self.snapshot().registry.get(&sensor).cloned()
    }

    pub fn descriptor(&self, sensor: SensorId) -> Option<SensorDescriptor> {
        let state = self.snapshot();
        let entry = state.registry.get(&sensor)?;
        match state.entities.get(&EntityRef::new(
            EntityKind::Sensor(entry.category),
            entry.category_local_id,
        ))? {
            CatalogEntity::Sensor(d) => Some(d.clone()),
            _ => None,
        }
    }

    /// Registry entries matching `filter`, ordered by sensor id.
    pub fn list_sensors(&self, filter: &SensorFilter) -> Vec<SensorRegistryEntry> {
        let state = self.snapshot();
        state
            .registry
            .values()
            .filter(|e| filter.include_deleted || e.deleted_at.is_none())
            .filter(|e| filter.category.is_none_or(|c| c == e.category))
            .filter(|e| {
                filter.site.is_none_or(|site| {
                    let r = EntityRef::new(EntityKind::Sensor(e.category), e.category_local_id);
                    state.entities.get(&r).and_then(|d| d.site_id()) == Some(site)
                })
            })
            .cloned()
            .collect()
    }

    /// The chain from `sensor` through its equipment and site to the
    /// operator: sensor, then module and/or battery, then inverter, then
    /// site, then operator. Tombstoned rows are still followed.
    pub fn lineage(&self, sensor: SensorId) -> Result<Vec<CatalogEntity>> {
        let state = self.snapshot();
        let entry = state.registry.get(&sensor).ok_or(Error::UnknownSensor(sensor))?;
        let fetch = |kind: EntityKind, id: EntityId| -> Result<CatalogEntity> {
            let r = EntityRef::new(kind, id);
            state
                .entities
                .get(&r)
                .cloned()
                .ok_or_else(|| Error::Integrity(format!("lineage of {sensor}: missing {r}")))
        };
        let CatalogEntity::Sensor(desc) = fetch(EntityKind::Sensor(entry.category), entry.category_local_id)? else {
            unreachable!("sensor kinds hold descriptors");
        };

        let (module, battery, inverter) = match desc.links {
            SensorLinks::Electricity {
                module_id,
                inverter_id,
                battery_id,
            } => (module_id, battery_id, inverter_id),
            SensorLinks::PvTemperature { module_id } => (Some(module_id), None, None),
            _ => (None, None, None),
        };
        let mut chain = vec![CatalogEntity::Sensor(desc.clone())];
        let mut inverter = inverter;
        if let Some(id) = module {
            let m = fetch(EntityKind::PvModule, id)?;
            if let CatalogEntity::PvModule(pm) = &m {
                inverter.get_or_insert(pm.inverter_id);
            }
            chain.push(m);
        }
        if let Some(id) = battery {
            let b = fetch(EntityKind::Battery, id)?;
            if let CatalogEntity::Battery(bat) = &b {
                inverter.get_or_insert(bat.inverter_id);
            }
            chain.push(b);
        }
        if let Some(id) = inverter {
            chain.push(fetch(EntityKind::Inverter, id)?);
        }
        let site = fetch(EntityKind::Site, desc.site_id)?;
        let operator_id = match &site {
            CatalogEntity::Site(s) => s.operator_id,
            _ => unreachable!("site kind holds sites"),
        };
        chain.push(site);
        chain.push(fetch(EntityKind::Operator, operator_id)?);
        Ok(chain)
    }

    /// The current state as a catalog document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot().to_document()).expect("catalog serializes")
    }
}
