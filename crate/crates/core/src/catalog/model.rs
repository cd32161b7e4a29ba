use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::{SensorId, Timestamp};

/// Row id inside one table. `0` asks the catalog to assign a fresh id.
pub type EntityId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    pub id: EntityId,
    pub name: String,
    pub contact: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: EntityId,
    pub operator_id: EntityId,
    pub name: String,
    /// Degrees, -90..=90.
    pub latitude: f64,
    /// Degrees, -180..=180.
    pub longitude: f64,
    /// Metres above sea level.
    pub elevation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareItem {
    pub id: EntityId,
    pub serial_number: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedValue {
    pub value: f64,
    pub unit: String,
}

impl RatedValue {
    pub fn new(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: unit.into(),
        }
    }
}

/// Manufacturer data shared by the inverter and PV datasheet tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datasheet {
    pub id: EntityId,
    pub manufacturer: String,
    pub model: String,
    #[serde(default)]
    pub rated: BTreeMap<String, RatedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

pub type InverterDatasheet = Datasheet;
pub type PvDatasheet = Datasheet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerAxis {
    SingleHorizontal,
    SingleVertical,
    SingleTilted,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracker {
    pub id: EntityId,
    pub site_id: EntityId,
    pub hardware_id: EntityId,
    pub axis: TrackerAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inverter {
    pub id: EntityId,
    pub site_id: EntityId,
    pub hardware_id: EntityId,
    pub datasheet_id: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub id: EntityId,
    pub site_id: EntityId,
    pub hardware_id: EntityId,
    pub inverter_id: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvModule {
    pub id: EntityId,
    pub site_id: EntityId,
    pub hardware_id: EntityId,
    pub datasheet_id: EntityId,
    pub inverter_id: EntityId,
    /// `None` for fixed mounting, which then requires `tilt` and `orientation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracker_id: Option<EntityId>,
    /// Degrees from horizontal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
    /// Degrees of azimuth, clockwise from north.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorCategory {
    Electricity,
    PvTemperature,
    Irradiance,
    AmbientTemperature,
    WindSpeed,
    WindDirection,
    Climate,
}

impl SensorCategory {
    pub const ALL: [SensorCategory; 7] = [
        SensorCategory::Electricity,
        SensorCategory::PvTemperature,
        SensorCategory::Irradiance,
        SensorCategory::AmbientTemperature,
        SensorCategory::WindSpeed,
        SensorCategory::WindDirection,
        SensorCategory::Climate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensorCategory::Electricity => "electricity",
            SensorCategory::PvTemperature => "pv_temperature",
            SensorCategory::Irradiance => "irradiance",
            SensorCategory::AmbientTemperature => "ambient_temperature",
            SensorCategory::WindSpeed => "wind_speed",
            SensorCategory::WindDirection => "wind_direction",
            SensorCategory::Climate => "climate",
        }
    }
}

impl fmt::Display for SensorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensorCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown sensor category {s:?}")))
    }
}

/// Category plus the links only that category has.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "snake_case")]
pub enum SensorLinks {
    Electricity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        module_id: Option<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inverter_id: Option<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        battery_id: Option<EntityId>,
    },
    PvTemperature {
        module_id: EntityId,
    },
    Irradiance {
        tilt: f64,
        orientation: f64,
    },
    AmbientTemperature,
    WindSpeed,
    WindDirection,
    Climate,
}

impl SensorLinks {
    pub fn category(&self) -> SensorCategory {
        match self {
            SensorLinks::Electricity { .. } => SensorCategory::Electricity,
            SensorLinks::PvTemperature { .. } => SensorCategory::PvTemperature,
            SensorLinks::Irradiance { .. } => SensorCategory::Irradiance,
            SensorLinks::AmbientTemperature => SensorCategory::AmbientTemperature,
            SensorLinks::WindSpeed => SensorCategory::WindSpeed,
            SensorLinks::WindDirection => SensorCategory::WindDirection,
            SensorLinks::Climate => SensorCategory::Climate,
        }
    }
}

/// One row of a category's sensor table. Manufacturer data lives inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorDescriptor {
    /// Local to the category table.
    pub id: EntityId,
    #[serde(flatten)]
    pub links: SensorLinks,
    pub site_id: EntityId,
    pub hardware_id: EntityId,
    pub unit: String,
    /// What is measured, e.g. "voltage" or "PAR".
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub measurand: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

impl SensorDescriptor {
    pub fn new(links: SensorLinks, site_id: EntityId, hardware_id: EntityId, unit: impl Into<String>) -> Self {
        Self {
            id: 0,
            links,
            site_id,
            hardware_id,
            unit: unit.into(),
            measurand: String::new(),
            attributes: BTreeMap::new(),
            deleted_at: None,
        }
    }

    pub fn category(&self) -> SensorCategory {
        self.links.category()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRegistryEntry {
    pub sensor_id: SensorId,
    pub category: SensorCategory,
    pub category_local_id: EntityId,
    pub registered_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Operator,
    Site,
    Hardware,
    InverterDatasheet,
    PvDatasheet,
    Tracker,
    Inverter,
    Battery,
    PvModule,
    Sensor(SensorCategory),
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityKind::Operator => f.write_str("operator"),
            EntityKind::Site => f.write_str("site"),
            EntityKind::Hardware => f.write_str("hardware"),
            EntityKind::InverterDatasheet => f.write_str("inverter_datasheet"),
            EntityKind::PvDatasheet => f.write_str("pv_datasheet"),
            EntityKind::Tracker => f.write_str("tracker"),
            EntityKind::Inverter => f.write_str("inverter"),
            EntityKind::Battery => f.write_str("battery"),
            EntityKind::PvModule => f.write_str("pv_module"),
            EntityKind::Sensor(c) => write!(f, "{c}_sensor"),
        }
    }
}

/// Address of a row: table plus id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityRef {
    pub kind: EntityKind,
    pub id: EntityId,
}

impl EntityRef {
    pub const fn new(kind: EntityKind, id: EntityId) -> Self {
        Self { kind, id }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "entity", rename_all = "snake_case")]
pub enum CatalogEntity {
    Operator(Operator),
    Site(Site),
    Hardware(HardwareItem),
    InverterDatasheet(InverterDatasheet),
    PvDatasheet(PvDatasheet),
    Tracker(Tracker),
    Inverter(Inverter),
    Battery(Battery),
    PvModule(PvModule),
    Sensor(SensorDescriptor),
}

impl CatalogEntity {
    pub fn kind(&self) -> EntityKind {
        match self {
            CatalogEntity::Operator(_) => EntityKind::Operator,
            CatalogEntity::Site(_) => EntityKind::Site,
            CatalogEntity::Hardware(_) => EntityKind::Hardware,
            CatalogEntity::InverterDatasheet(_) => EntityKind::InverterDatasheet,
            CatalogEntity::PvDatasheet(_) => EntityKind::PvDatasheet,
            CatalogEntity::Tracker(_) => EntityKind::Tracker,
            CatalogEntity::Inverter(_) => EntityKind::Inverter,
            CatalogEntity::Battery(_) => EntityKind::Battery,
            CatalogEntity::PvModule(_) => EntityKind::PvModule,
            CatalogEntity::Sensor(s) => EntityKind::Sensor(s.category()),
        }
    }

    pub fn id(&self) -> EntityId {
        match self {
            CatalogEntity::Operator(e) => e.id,
            CatalogEntity::Site(e) => e.id,
            CatalogEntity::Hardware(e) => e.id,
            CatalogEntity::InverterDatasheet(e) | CatalogEntity::PvDatasheet(e) => e.id,
            CatalogEntity::Tracker(e) => e.id,
            CatalogEntity::Inverter(e) => e.id,
            CatalogEntity::Battery(e) => e.id,
            CatalogEntity::PvModule(e) => e.id,
            CatalogEntity::Sensor(e) => e.id,
        }
    }

    pub fn entity_ref(&self) -> EntityRef {
        EntityRef::new(self.kind(), self.id())
    }

    pub fn deleted_at(&self) -> Option<Timestamp> {
        match self {
            CatalogEntity::Operator(e) => e.deleted_at,
            CatalogEntity::Site(e) => e.deleted_at,
            CatalogEntity::Hardware(e) => e.deleted_at,
            CatalogEntity::InverterDatasheet(e) | CatalogEntity::PvDatasheet(e) => e.deleted_at,
            CatalogEntity::Tracker(e) => e.deleted_at,
            CatalogEntity::Inverter(e) => e.deleted_at,
            CatalogEntity::Battery(e) => e.deleted_at,
            CatalogEntity::PvModule(e) => e.deleted_at,
            CatalogEntity::Sensor(e) => e.deleted_at,
        }
    }

    pub(crate) fn set_id(&mut self, id: EntityId) {
        match self {
            CatalogEntity::Operator(e) => e.id = id,
            CatalogEntity::Site(e) => e.id = id,
            CatalogEntity::Hardware(e) => e.id = id,
            CatalogEntity::InverterDatasheet(e) | CatalogEntity::PvDatasheet(e) => e.id = id,
            CatalogEntity::Tracker(e) => e.id = id,
            CatalogEntity::Inverter(e) => e.id = id,
            CatalogEntity::Battery(e) => e.id = id,
            CatalogEntity::PvModule(e) => e.id = id,
            CatalogEntity::Sensor(e) => e.id = id,
        }
    }

    pub(crate) fn set_deleted_at(&mut self, at: Option<Timestamp>) {
        match self {
            CatalogEntity::Operator(e) => e.deleted_at = at,
            CatalogEntity::Site(e) => e.deleted_at = at,
            CatalogEntity::Hardware(e) => e.deleted_at = at,
            CatalogEntity::InverterDatasheet(e) | CatalogEntity::PvDatasheet(e) => e.deleted_at = at,
            CatalogEntity::Tracker(e) => e.deleted_at = at,
            CatalogEntity::Inverter(e) => e.deleted_at = at,
            CatalogEntity::Battery(e) => e.deleted_at = at,
            CatalogEntity::PvModule(e) => e.deleted_at = at,
            CatalogEntity::Sensor(e) => e.deleted_at = at,
        }
    }

    /// Every row this entity points at.
    pub fn references(&self) -> Vec<EntityRef> {
        use EntityKind as K;
        let r = EntityRef::new;
        match self {
            CatalogEntity::Operator(_)
            | CatalogEntity::Hardware(_)
            | CatalogEntity::InverterDatasheet(_)
            | CatalogEntity::PvDatasheet(_) => vec![],
            CatalogEntity::Site(s) => vec![r(K::Operator, s.operator_id)],
            CatalogEntity::Tracker(t) => vec![r(K::Site, t.site_id), r(K::Hardware, t.hardware_id)],
            CatalogEntity::Inverter(i) => vec![
                r(K::Site, i.site_id),
                r(K::Hardware, i.hardware_id),
                r(K::InverterDatasheet, i.datasheet_id),
            ],
            CatalogEntity::Battery(b) => vec![
                r(K::Site, b.site_id),
                r(K::Hardware, b.hardware_id),
                r(K::Inverter, b.inverter_id),
            ],
            CatalogEntity::PvModule(m) => {
                let mut v = vec![
                    r(K::Site, m.site_id),
                    r(K::Hardware, m.hardware_id),
                    r(K::PvDatasheet, m.datasheet_id),
                    r(K::Inverter, m.inverter_id),
                ];
                v.extend(m.tracker_id.map(|t| r(K::Tracker, t)));
                v
            }
            CatalogEntity::Sensor(s) => {
                let mut v = vec![r(K::Site, s.site_id), r(K::Hardware, s.hardware_id)];
                match &s.links {
                    SensorLinks::Electricity {
                        module_id,
                        inverter_id,
                        battery_id,
                    } => {
                        v.extend(module_id.map(|i| r(K::PvModule, i)));
                        v.extend(inverter_id.map(|i| r(K::Inverter, i)));
                        v.extend(battery_id.map(|i| r(K::Battery, i)));
                    }
                    SensorLinks::PvTemperature { module_id } => v.push(r(K::PvModule, *module_id)),
                    _ => {}
                }
                v
            }
        }
    }

    /// The site this entity is installed at, if it belongs to one.
    pub fn site_id(&self) -> Option<EntityId> {
        match self {
            CatalogEntity::Site(s) => Some(s.id),
            CatalogEntity::Tracker(e) => Some(e.site_id),
            CatalogEntity::Inverter(e) => Some(e.site_id),
            CatalogEntity::Battery(e) => Some(e.site_id),
            CatalogEntity::PvModule(e) => Some(e.site_id),
            CatalogEntity::Sensor(e) => Some(e.site_id),
            _ => None,
        }
    }
}
