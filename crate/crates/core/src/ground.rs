//! Payload data ground segment processing and marketplace delivery.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::model::{
    DataProduct, EventId, GroundLatencySpec, ProductId, ProductKind, ServiceArchetype, SimTime, Triggering,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("product {0} was already delivered")]
    DuplicateDelivery(ProductId),
    #[error("delivery time of product {0} is not finite")]
    NonFinite(ProductId),
}

/// Ground processing time for a product of `kind`.
pub fn pdgs_latency(kind: ProductKind, latencies: &GroundLatencySpec) -> f64 {
    match kind {
        ProductKind::RawScene => latencies.pdgs_raw_s,
        ProductKind::ThematicMask | ProductKind::RoiChip => latencies.pdgs_mask_s,
    }
}

/// Smallest multiple of `cycle` not earlier than `t`.
pub fn align_to_cycle(t: SimTime, cycle: f64) -> SimTime {
    let k = math::ceil(t / cycle);
    if k * cycle < t { (k + 1.0) * cycle } else { k * cycle }
}

/// Delivery time of a product fully on the ground at `downlinked`.
/// Periodic services release products at the next production cycle boundary.
pub fn pdgs_process(
    kind: ProductKind,
    downlinked: SimTime,
    latencies: &GroundLatencySpec,
    archetype: &ServiceArchetype,
) -> SimTime {
    let processed = downlinked + pdgs_latency(kind, latencies);
    match (archetype.triggering, archetype.periodic_cycle_s) {
        (Triggering::Periodic, Some(cycle)) if cycle > 0.0 => align_to_cycle(processed, cycle),
        _ => processed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketplaceRecord {
    pub product_id: ProductId,
    pub kind: ProductKind,
    pub event_ids: BTreeSet<EventId>,
    pub delivered: SimTime,
}

/// Append-only delivery log, one record per product.
#[derive(Debug, Clone, Default)]
pub struct Marketplace {
    records: Vec<MarketplaceRecord>,
    index: BTreeMap<ProductId, usize>,
}

impl Marketplace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn deliver(&mut self, product: &DataProduct, delivered: SimTime) -> Result<&MarketplaceRecord, GroundError> {
        if !delivered.is_finite() {
            return Err(GroundError::NonFinite(product.id));
        }
        if self.index.contains_key(&product.id) {
            return Err(GroundError::DuplicateDelivery(product.id));
        }
        self.index.insert(product.id, self.records.len());
        self.records.push(MarketplaceRecord {
            product_id: product.id,
            kind: product.kind,
            event_ids: product.event_ids.clone(),
            delivered,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn get(&self, id: ProductId) -> Option<&MarketplaceRecord> {
        self.index.get(&id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records ordered by delivery time, then product id.
    pub fn sorted_records(&self) -> Vec<MarketplaceRecord> {
        let mut v = self.records.clone();
        v.sort_by(|a, b| a.delivered.total_cmp(&b.delivered).then(a.product_id.cmp(&b.product_id)));
        v
    }
}
