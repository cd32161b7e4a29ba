//! Describe one site's equipment, register its sensors and trace lineage.

use std::collections::BTreeMap;

use solvault::catalog::*;

fn hardware(cat: &Catalog, serial: &str) -> solvault::error::Result<EntityId> {
    cat.upsert_entity(CatalogEntity::Hardware(HardwareItem {
        id: 0,
        serial_number: serial.into(),
        description: String::new(),
        deleted_at: None,
    }))
}

fn main() -> solvault::error::Result<()> {
    let dir = tempfile::tempdir()?;
    let cat = Catalog::open(dir.path().join("catalog.json"))?;

    let operator = cat.upsert_entity(CatalogEntity::Operator(Operator {
        id: 0,
        name: "Solar lab".into(),
        contact: "ops@example.org".into(),
        deleted_at: None,
    }))?;
    let site = cat.upsert_entity(CatalogEntity::Site(Site {
        id: 0,
        operator_id: operator,
        name: "Rooftop".into(),
        latitude: 35.14,
        longitude: 33.41,
        elevation: 160.0,
        deleted_at: None,
    }))?;
    let inv_sheet = cat.upsert_entity(CatalogEntity::InverterDatasheet(Datasheet {
        id: 0,
        manufacturer: "Acme".into(),
        model: "INV-5K".into(),
        rated: BTreeMap::from([("p_ac".into(), RatedValue::new(5000.0, "W"))]),
        deleted_at: None,
    }))?;
    let pv_sheet = cat.upsert_entity(CatalogEntity::PvDatasheet(Datasheet {
        id: 0,
        manufacturer: "Acme".into(),
        model: "PV-330".into(),
        rated: BTreeMap::from([("p_mpp".into(), RatedValue::new(330.0, "W"))]),
        deleted_at: None,
    }))?;
    let inverter = cat.upsert_entity(CatalogEntity::Inverter(Inverter {
        id: 0,
        site_id: site,
        hardware_id: hardware(&cat, "INV-0001")?,
        datasheet_id: inv_sheet,
        deleted_at: None,
    }))?;
    let module = cat.upsert_entity(CatalogEntity::PvModule(PvModule {
        id: 0,
        site_id: site,
        hardware_id: hardware(&cat, "PV-0001")?,
        datasheet_id: pv_sheet,
        inverter_id: inverter,
        tracker_id: None,
        tilt: Some(27.0),
        orientation: Some(180.0),
        deleted_at: None,
    }))?;

    let mut power = SensorDescriptor::new(
        SensorLinks::Electricity {
            module_id: Some(module),
            inverter_id: None,
            battery_id: None,
        },
        site,
        hardware(&cat, "EL-0001")?,
        "W",
    );
    power.measurand = "power".into();
    let power = cat.register_sensor(power)?;
    let par = cat.register_sensor(SensorDescriptor::new(
        SensorLinks::Climate,
        site,
        hardware(&cat, "SP-0001")?,
        "umol/m2/s",
    ))?;

    for sensor in [power, par] {
        let chain: Vec<String> = cat
            .lineage(sensor)?
            .iter()
            .map(|e| e.entity_ref().to_string())
            .collect();
        println!("sensor {sensor}: {}", chain.join(" -> "));
    }

    let dangling = cat.upsert_entity(CatalogEntity::Site(Site {
        id: 0,
        operator_id: 99,
        name: "Nowhere".into(),
        latitude: 0.0,
        longitude: 0.0,
        elevation: 0.0,
        deleted_at: None,
    }));
    println!("dangling site: {}", dangling.unwrap_err());

    println!("{}", cat.to_json());
    Ok(())
}
