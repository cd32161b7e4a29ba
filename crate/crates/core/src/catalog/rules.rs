//! Integrity rules, checked against a whole candidate state before any write
//! becomes visible.

use std::collections::{BTreeMap, HashMap};

use super::model::*;
use super::State;
use crate::error::{Error, Result};
use crate::series::SensorId;

fn integrity(msg: String) -> Error {
    Error::Integrity(msg)
}

fn check_text(owner: EntityRef, field: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        return Err(integrity(format!("{owner}: {field} must not be empty")));
    }
    Ok(())
}

fn check_angle(owner: EntityRef, field: &str, value: f64, lo: f64, hi: f64, hi_inclusive: bool) -> Result<()> {
    let ok = value.is_finite() && value >= lo && if hi_inclusive { value <= hi } else { value < hi };
    if !ok {
        let close = if hi_inclusive { ']' } else { ')' };
        return Err(integrity(format!(
            "{owner}: {field} {value} outside [{lo}, {hi}{close}"
        )));
    }
    Ok(())
}

fn check_tilt(owner: EntityRef, tilt: f64) -> Result<()> {
    check_angle(owner, "tilt", tilt, 0.0, 90.0, true)
}

fn check_orientation(owner: EntityRef, orientation: f64) -> Result<()> {
    check_angle(owner, "orientation", orientation, 0.0, 360.0, false)
}

fn check_fields(e: &CatalogEntity) -> Result<()> {
    let me = e.entity_ref();
    match e {
        CatalogEntity::Operator(o) => check_text(me, "name", &o.name),
        CatalogEntity::Site(s) => {
            check_text(me, "name", &s.name)?;
            check_angle(me, "latitude", s.latitude, -90.0, 90.0, true)?;
            check_angle(me, "longitude", s.longitude, -180.0, 180.0, true)?;
            if !s.elevation.is_finite() {
                return Err(integrity(format!("{me}: elevation must be finite")));
            }
            Ok(())
        }
        CatalogEntity::Hardware(h) => check_text(me, "serial_number", &h.serial_number),
        CatalogEntity::InverterDatasheet(d) | CatalogEntity::PvDatasheet(d) => {
            check_text(me, "manufacturer", &d.manufacturer)?;
            check_text(me, "model", &d.model)?;
            match d.rated.iter().find(|(_, v)| !v.value.is_finite()) {
                Some((k, _)) => Err(integrity(format!("{me}: rated value {k:?} is not finite"))),
                None => Ok(()),
            }
        }
        CatalogEntity::Tracker(_) | CatalogEntity::Inverter(_) | CatalogEntity::Battery(_) => Ok(()),
        CatalogEntity::PvModule(m) => match (m.tracker_id, m.tilt, m.orientation) {
            (None, Some(t), Some(o)) => {
                check_tilt(me, t)?;
                check_orientation(me, o)
            }
            (None, _, _) => Err(integrity(format!(
                "{me}: fixed mounting requires both tilt and orientation"
            ))),
            (Some(_), None, None) => Ok(()),
            (Some(_), _, _) => Err(integrity(format!(
                "{me}: tracked module must not set tilt or orientation"
            ))),
        },
        CatalogEntity::Sensor(s) => {
            check_text(me, "unit", &s.unit)?;
            if let SensorLinks::Irradiance { tilt, orientation } = s.links {
                check_tilt(me, tilt)?;
                check_orientation(me, orientation)?;
            }
            Ok(())
        }
    }
}

/// Inverter an entity hangs off, following battery and module links.
fn inverter_of(state: &State, r: EntityRef) -> Option<EntityId> {
    match state.entities.get(&r)? {
        CatalogEntity::Inverter(i) => Some(i.id),
        CatalogEntity::Battery(b) => Some(b.inverter_id),
        CatalogEntity::PvModule(m) => Some(m.inverter_id),
        _ => None,
    }
}

fn check_links(state: &State, e: &CatalogEntity) -> Result<()> {
    let me = e.entity_ref();
    let live = e.deleted_at().is_none();
    for target in e.references() {
        let Some(t) = state.entities.get(&target) else {
            return Err(integrity(format!("{me}: missing {target}")));
        };
        if !live {
            continue;
        }
        if t.deleted_at().is_some() {
            return Err(integrity(format!("{me}: {target} is deleted")));
        }
        if target.kind != EntityKind::Site {
            if let (Some(mine), Some(theirs)) = (e.site_id(), t.site_id()) {
                if mine != theirs {
                    return Err(integrity(format!(
                        "{me} on site {mine} cannot link {target} on site {theirs}"
                    )));
                }
            }
        }
    }
    if let CatalogEntity::Sensor(SensorDescriptor {
        links:
            SensorLinks::Electricity {
                module_id,
                inverter_id,
                battery_id,
            },
        ..
    }) = e
    {
        let derived: Vec<(EntityRef, EntityId)> = [
            module_id.map(|i| EntityRef::new(EntityKind::PvModule, i)),
            battery_id.map(|i| EntityRef::new(EntityKind::Battery, i)),
            inverter_id.map(|i| EntityRef::new(EntityKind::Inverter, i)),
        ]
        .into_iter()
        .flatten()
        .filter_map(|r| inverter_of(state, r).map(|inv| (r, inv)))
        .collect();
        if let Some(w) = derived.windows(2).find(|w| w[0].1 != w[1].1) {
            return Err(integrity(format!(
                "{me}: {} feeds inverter {} but {} feeds inverter {}",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(())
}

fn check_unique(state: &State) -> Result<()> {
    let mut serials: HashMap<&str, EntityId> = HashMap::new();
    let mut sheets: HashMap<(EntityKind, &str, &str), EntityId> = HashMap::new();
    for e in state.entities.values() {
        match e {
            CatalogEntity::Hardware(h) => {
                if let Some(other) = serials.insert(h.serial_number.as_str(), h.id) {
                    return Err(Error::Duplicate(format!(
                        "serial number {:?} used by hardware {other} and {}",
                        h.serial_number, h.id
                    )));
                }
            }
            CatalogEntity::InverterDatasheet(d) | CatalogEntity::PvDatasheet(d) => {
                let key = (e.kind(), d.manufacturer.as_str(), d.model.as_str());
                if let Some(other) = sheets.insert(key, d.id) {
                    return Err(Error::Duplicate(format!(
                        "{} {:?} {:?} already exists as {} {other}",
                        e.kind(),
                        d.manufacturer,
                        d.model,
                        e.kind()
                    )));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_registry(state: &State) -> Result<()> {
    let mut by_local: BTreeMap<EntityRef, SensorId> = BTreeMap::new();
    for entry in state.registry.values() {
        let r = EntityRef::new(EntityKind::Sensor(entry.category), entry.category_local_id);
        if entry.sensor_id.0 >= state.next_sensor_id {
            return Err(integrity(format!(
                "sensor id {} not below next_sensor_id {}",
                entry.sensor_id, state.next_sensor_id
            )));
        }
        let Some(desc) = state.entities.get(&r) else {
            return Err(integrity(format!(
                "registry entry {} points at missing {r}",
                entry.sensor_id
            )));
        };
        if desc.deleted_at().is_some() != entry.deleted_at.is_some() {
            return Err(integrity(format!(
                "registry entry {} and {r} disagree on deletion",
                entry.sensor_id
            )));
        }
        if let Some(other) = by_local.insert(r, entry.sensor_id) {
            return Err(Error::Duplicate(format!(
                "{r} registered as both {other} and {}",
                entry.sensor_id
            )));
        }
    }
    for r in state.entities.keys() {
        if matches!(r.kind, EntityKind::Sensor(_)) && !by_local.contains_key(r) {
            return Err(integrity(format!("{r} has no registry entry")));
        }
    }
    Ok(())
}

/// Checks one entity in the context of `state`.
pub(super) fn check_entity(state: &State, e: &CatalogEntity) -> Result<()> {
    check_fields(e)?;
    check_links(state, e)
}

/// Checks every rule over the whole state.
pub(super) fn check_all(state: &State) -> Result<()> {
    for (r, e) in &state.entities {
        if *r != e.entity_ref() {
            return Err(integrity(format!("{r} stored under a mismatched key")));
        }
        if e.deleted_at().is_none() {
            check_fields(e)?;
        }
        check_links(state, e)?;
    }
    check_unique(state)?;
    check_registry(state)
}
