//! X-band downlink: one transmitter per satellite, priority-ordered onboard
//! queues, resumable transfers confined to contact windows.
//!
//! The scheduler is event driven. The owner calls [`DownlinkScheduler::open_contact`],
//! [`DownlinkScheduler::close_contact`] and [`DownlinkScheduler::enqueue`] as
//! things happen and schedules a segment-end callback at every [`Segment::at`]
//! it is handed back. Transfers are non-preemptive: a product keeps the link
//! until it completes or its contact closes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EventQueue;
use crate::math;
use crate::model::{DataProduct, ProductId, SatelliteId, SimTime, StationId};
use crate::orbit::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub product_id: ProductId,
    pub satellite_id: SatelliteId,
    pub station_id: StationId,
    pub start: SimTime,
    pub end: SimTime,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DownlinkError {
    #[error("product {0} is already queued")]
    Duplicate(ProductId),
    #[error("product {id} completes at {created} s, cannot be queued at {now} s")]
    NotReady { id: ProductId, created: SimTime, now: SimTime },
}

#[derive(Debug, Clone, Copy)]
struct QueueKey {
    priority: i32,
    created: f64,
    id: ProductId,
}

impl PartialEq for QueueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueKey {}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .cmp(&other.priority)
            .then_with(|| self.created.total_cmp(&other.created))
            .then_with(|| self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone)]
struct OpenContact {
    station: StationId,
    start: SimTime,
    end: SimTime,
    rate_bps: f64,
}

#[derive(Debug, Clone)]
struct Active {
    key: QueueKey,
    station: StationId,
    rate_bps: f64,
    seg_start: SimTime,
    /// Instant the remaining bits would be through at full rate.
    completes_at: SimTime,
    generation: u64,
}

#[derive(Debug, Default)]
struct Transmitter {
    queue: BTreeSet<QueueKey>,
    open: Vec<OpenContact>,
    active: Option<Active>,
}

/// A running transfer segment; the owner must call
/// [`DownlinkScheduler::segment_end`] at `at` with this generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub satellite_id: SatelliteId,
    pub generation: u64,
    pub at: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    /// Product fully on the ground, with its completion time.
    pub completed: Option<(ProductId, SimTime)>,
    pub next: Option<Segment>,
}

/// Bit accounting for one product at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VolumeLedger {
    pub generated: u64,
    pub delivered: u64,
    pub partial: u64,
    pub never_transferred: u64,
}

impl VolumeLedger {
    pub fn balances(&self) -> bool {
        self.generated == self.delivered + self.partial + self.never_transferred
    }
}

impl core::ops::AddAssign for VolumeLedger {
    fn add_assign(&mut self, o: Self) {
        self.generated += o.generated;
        self.delivered += o.delivered;
        self.partial += o.partial;
        self.never_transferred += o.never_transferred;
    }
}

#[derive(Debug, Default)]
pub struct DownlinkScheduler {
    transmitters: BTreeMap<SatelliteId, Transmitter>,
    products: BTreeMap<ProductId, DataProduct>,
    owner: BTreeMap<ProductId, SatelliteId>,
    completed: BTreeMap<ProductId, SimTime>,
    records: Vec<TransferRecord>,
    next_generation: u64,
}

impl DownlinkScheduler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues a product that is complete onboard. Starts it right away when
    /// the transmitter is idle inside an open contact.
    pub fn enqueue(
        &mut self,
        satellite: &SatelliteId,
        product: DataProduct,
        now: SimTime,
    ) -> Result<Option<Segment>, DownlinkError> {
        if self.products.contains_key(&product.id) {
            return Err(DownlinkError::Duplicate(product.id));
        }
        if product.created > now {
            return Err(DownlinkError::NotReady { id: product.id, created: product.created, now });
        }
        let key = QueueKey { priority: product.priority, created: product.created, id: product.id };
        self.owner.insert(product.id, satellite.clone());
        self.products.insert(product.id, product);
        self.tx(satellite).queue.insert(key);
        Ok(self.try_start(satellite, now))
    }

    pub fn open_contact(
        &mut self,
        satellite: &SatelliteId,
        station: &StationId,
        window: &Window,
        rate_bps: f64,
        now: SimTime,
    ) -> Option<Segment> {
        self.tx(satellite).open.push(OpenContact {
            station: station.clone(),
            start: window.start,
            end: window.end,
            rate_bps,
        });
        self.try_start(satellite, now)
    }

    pub fn close_contact(&mut self, satellite: &SatelliteId, station: &StationId, now: SimTime) -> StepOutcome {
        let mut out = StepOutcome::default();
        let on_this = self.tx(satellite).active.as_ref().is_some_and(|a| &a.station == station);
        if on_this {
            out.completed = self.finish_segment(satellite, now);
        }
        self.tx(satellite).open.retain(|c| &c.station != station);
        out.next = self.try_start(satellite, now);
        out
    }

    /// Ends the running segment if `generation` is current; stale callbacks
    /// return `None`.
    pub fn segment_end(&mut self, satellite: &SatelliteId, generation: u64, now: SimTime) -> Option<StepOutcome> {
        let current = self.tx(satellite).active.as_ref().map(|a| a.generation);
        if current != Some(generation) {
            return None;
        }
        let completed = self.finish_segment(satellite, now);
        Some(StepOutcome { completed, next: self.try_start(satellite, now) })
    }

    /// Pauses every running transfer at `now` (end of simulation).
    pub fn finish(&mut self, now: SimTime) -> Vec<(ProductId, SimTime)> {
        let sats: Vec<SatelliteId> = self.transmitters.keys().cloned().collect();
        sats.iter().filter_map(|s| self.finish_segment(s, now)).collect()
    }

    pub fn records(&self) -> &[TransferRecord] {
        &self.records
    }

    pub fn product(&self, id: ProductId) -> Option<&DataProduct> {
        self.products.get(&id)
    }

    pub fn products(&self) -> impl Iterator<Item = &DataProduct> {
        self.products.values()
    }

    pub fn completion_time(&self, id: ProductId) -> Option<SimTime> {
        self.completed.get(&id).copied()
    }

    /// Products still onboard, per satellite, in queue order.
    pub fn residue(&self) -> BTreeMap<SatelliteId, Vec<ProductId>> {
        self.transmitters
            .iter()
            .filter(|(_, t)| !t.queue.is_empty())
            .map(|(s, t)| (s.clone(), t.queue.iter().map(|k| k.id).collect()))
            .collect()
    }

    pub fn ledger(&self, id: ProductId) -> Option<VolumeLedger> {
        let p = self.products.get(&id)?;
        Some(ledger_of(p))
    }

    pub fn total_ledger(&self) -> VolumeLedger {
        let mut total = VolumeLedger::default();
        for p in self.products.values() {
            total += ledger_of(p);
        }
        total
    }

    pub fn into_parts(self) -> (Vec<DataProduct>, Vec<TransferRecord>, BTreeMap<ProductId, SimTime>) {
        (self.products.into_values().collect(), self.records, self.completed)
    }

    fn tx(&mut self, satellite: &SatelliteId) -> &mut Transmitter {
        self.transmitters.entry(satellite.clone()).or_default()
    }

    fn try_start(&mut self, satellite: &SatelliteId, now: SimTime) -> Option<Segment> {
        let generation = self.next_generation;
        let tx = self.transmitters.get_mut(satellite)?;
        if tx.active.is_some() {
            return None;
        }
        // single transmitter: earliest-starting live contact, ties by station id
        let contact = tx
            .open
            .iter()
            .filter(|c| c.end > now)
            .min_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.station.cmp(&b.station)))?
            .clone();
        let key = *tx.queue.first()?;
        let remaining = self.products[&key.id].remaining_bits();
        let completes_at = now + remaining as f64 / contact.rate_bps;
        let at = completes_at.min(contact.end);
        tx.active = Some(Active {
            key,
            station: contact.station,
            rate_bps: contact.rate_bps,
            seg_start: now,
            completes_at,
            generation,
        });
        self.next_generation += 1;
        Some(Segment { satellite_id: satellite.clone(), generation, at })
    }

    fn finish_segment(&mut self, satellite: &SatelliteId, now: SimTime) -> Option<(ProductId, SimTime)> {
        let tx = self.transmitters.get_mut(satellite)?;
        let active = tx.active.take()?;
        let product = self.products.get_mut(&active.key.id).expect("queued product exists");
        let remaining = product.remaining_bits();
        let by_rate = math::floor((now - active.seg_start) * active.rate_bps);
        let bits = if now >= active.completes_at || by_rate >= remaining as f64 {
            remaining
        } else {
            by_rate.max(0.0) as u64
        };
        if bits > 0 {
            product.transferred_bits += bits;
            self.records.push(TransferRecord {
                product_id: product.id,
                satellite_id: satellite.clone(),
                station_id: active.station,
                start: active.seg_start,
                end: now,
                bits,
            });
        }
        if product.is_complete() {
            tx.queue.remove(&active.key);
            self.completed.insert(product.id, now);
            Some((product.id, now))
        } else {
            None
        }
    }
}

fn ledger_of(p: &DataProduct) -> VolumeLedger {
    let (delivered, partial) = if p.is_complete() { (p.volume_bits, 0) } else { (0, p.transferred_bits) };
    VolumeLedger {
        generated: p.volume_bits,
        delivered,
        partial,
        never_transferred: p.volume_bits - p.transferred_bits,
    }
}

/// A contact opportunity between one satellite and one station.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlan {
    pub satellite_id: SatelliteId,
    pub station_id: StationId,
    pub window: Window,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub records: Vec<TransferRecord>,
    pub completion: BTreeMap<ProductId, SimTime>,
    pub products: Vec<DataProduct>,
    pub residue: BTreeMap<SatelliteId, Vec<ProductId>>,
}

enum Step {
    Ready(usize),
    Open(usize),
    Close(usize),
    SegmentEnd(SatelliteId, u64),
}

/// Offline transfer simulation: products become available at their `created`
/// time and drain through `contacts` until `horizon`.
pub fn simulate_transfers(
    products: Vec<(SatelliteId, DataProduct)>,
    contacts: &[ContactPlan],
    horizon: SimTime,
) -> Result<TransferOutcome, DownlinkError> {
    let mut q = EventQueue::new();
    for (i, c) in contacts.iter().enumerate() {
        if c.window.start <= horizon {
            q.push(c.window.start, Step::Open(i));
            q.push(c.window.end.min(horizon), Step::Close(i));
        }
    }
    for (i, (_, p)) in products.iter().enumerate() {
        if p.created <= horizon {
            q.push(p.created, Step::Ready(i));
        }
    }

    let mut sched = DownlinkScheduler::new();
    let mut slots: Vec<Option<(SatelliteId, DataProduct)>> = products.into_iter().map(Some).collect();
    let mut end_time = 0.0;
    while let Some((now, _, step)) = q.pop() {
        end_time = now;
        let next = match step {
            Step::Ready(i) => {
                let (sat, p) = slots[i].take().expect("product released once");
                sched.enqueue(&sat, p, now)?
            }
            Step::Open(i) => {
                let c = &contacts[i];
                sched.open_contact(&c.satellite_id, &c.station_id, &c.window, c.rate_bps, now)
            }
            Step::Close(i) => {
                let c = &contacts[i];
                sched.close_contact(&c.satellite_id, &c.station_id, now).next
            }
            Step::SegmentEnd(sat, generation) => sched.segment_end(&sat, generation, now).and_then(|o| o.next),
        };
        if let Some(seg) = next {
            q.push(seg.at, Step::SegmentEnd(seg.satellite_id, seg.generation));
        }
    }
    sched.finish(end_time.min(horizon));
    let residue = sched.residue();
    let (products, records, completion) = sched.into_parts();
    Ok(TransferOutcome { records, completion, products, residue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProductKind, SceneId};

    fn product(id: u64, kind: ProductKind, volume: u64, created: f64) -> DataProduct {
        DataProduct {
            id: ProductId(id),
            kind,
            scene_id: SceneId(0),
            event_ids: BTreeSet::new(),
            volume_bits: volume,
            created,
            priority: kind.priority(),
            transferred_bits: 0,
        }
    }

    fn contact(station: &str, start: f64, end: f64, rate: f64) -> ContactPlan {
        ContactPlan {
            satellite_id: SatelliteId::from("s"),
            station_id: StationId::from(station),
            window: Window { start, end, peak_elevation_deg: None },
            rate_bps: rate,
        }
    }

    fn sat() -> SatelliteId {
        SatelliteId::from("s")
    }

    #[test]
    fn exact_fit_completes_at_window_end() {
        let p = product(0, ProductKind::RawScene, 4_000, 0.0);
        let out = simulate_transfers(alloc::vec![(sat(), p)], &[contact("g", 10.0, 50.0, 100.0)], 1000.0).unwrap();
        assert_eq!(out.completion[&ProductId(0)], 50.0);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].bits, 4_000);
    }

    #[test]
    fn resumes_across_windows() {
        let p = product(0, ProductKind::RawScene, 6_000, 0.0);
        let out = simulate_transfers(
            alloc::vec![(sat(), p)],
            &[contact("g", 10.0, 50.0, 100.0), contact("g", 100.0, 200.0, 100.0)],
            1000.0,
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].bits, 4_000);
        assert_eq!(out.records[1].bits, 2_000);
        assert_eq!(out.completion[&ProductId(0)], 120.0);
    }

    #[test]
    fn no_window_no_transfer() {
        let p = product(0, ProductKind::RawScene, 6_000, 0.0);
        let out = simulate_transfers(alloc::vec![(sat(), p)], &[], 1000.0).unwrap();
        assert!(out.records.is_empty());
        assert!(out.completion.is_empty());
        assert_eq!(out.residue[&sat()], [ProductId(0)]);
    }

    #[test]
    fn priority_then_fifo() {
        let raw = product(0, ProductKind::RawScene, 1_000, 0.0);
        let mask = product(1, ProductKind::ThematicMask, 1_000, 5.0);
        let mask2 = product(2, ProductKind::ThematicMask, 1_000, 3.0);
        let out = simulate_transfers(
            alloc::vec![(sat(), raw), (sat(), mask), (sat(), mask2)],
            &[contact("g", 10.0, 100.0, 100.0)],
            1000.0,
        )
        .unwrap();
        let order: Vec<u64> = out.records.iter().map(|r| r.product_id.0).collect();
        assert_eq!(order, [2, 1, 0]);
    }

    #[test]
    fn non_preemptive_within_window() {
        let raw = product(0, ProductKind::RawScene, 5_000, 0.0);
        let mask = product(1, ProductKind::ThematicMask, 100, 20.0);
        let out = simulate_transfers(
            alloc::vec![(sat(), raw), (sat(), mask)],
            &[contact("g", 10.0, 100.0, 100.0)],
            1000.0,
        )
        .unwrap();
        assert_eq!(out.completion[&ProductId(0)], 60.0);
        assert_eq!(out.completion[&ProductId(1)], 61.0);
    }

    #[test]
    fn single_transmitter_prefers_earlier_contact() {
        let raw = product(0, ProductKind::RawScene, 10_000, 0.0);
        let out = simulate_transfers(
            alloc::vec![(sat(), raw)],
            &[contact("a", 10.0, 30.0, 100.0), contact("b", 20.0, 200.0, 1000.0)],
            1000.0,
        )
        .unwrap();
        // 2000 bits over "a", then the faster "b" takes over once "a" closes
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].station_id, StationId::from("a"));
        assert_eq!(out.records[0].bits, 2_000);
        assert_eq!(out.records[1].station_id, StationId::from("b"));
        assert_eq!(out.records[1].start, 30.0);
        assert_eq!(out.completion[&ProductId(0)], 38.0);
    }

    #[test]
    fn duplicate_and_early_enqueue_are_rejected() {
        let mut s = DownlinkScheduler::new();
        s.enqueue(&sat(), product(0, ProductKind::RawScene, 10, 0.0), 0.0).unwrap();
        assert_eq!(
            s.enqueue(&sat(), product(0, ProductKind::RawScene, 10, 0.0), 1.0),
            Err(DownlinkError::Duplicate(ProductId(0)))
        );
        assert!(matches!(
            s.enqueue(&sat(), product(1, ProductKind::RawScene, 10, 5.0), 1.0),
            Err(DownlinkError::NotReady { .. })
        ));
    }

    #[test]
    fn stale_segment_callbacks_are_ignored() {
        let mut s = DownlinkScheduler::new();
        let w = Window { start: 0.0, end: 10.0, peak_elevation_deg: None };
        s.open_contact(&sat(), &StationId::from("g"), &w, 100.0, 0.0);
        let seg = s.enqueue(&sat(), product(0, ProductKind::RawScene, 5_000, 0.0), 0.0).unwrap().unwrap();
        assert_eq!(seg.at, 10.0);
        let close = s.close_contact(&sat(), &StationId::from("g"), 10.0);
        assert!(close.completed.is_none());
        assert!(s.segment_end(&sat(), seg.generation, 10.0).is_none());
        assert_eq!(s.product(ProductId(0)).unwrap().transferred_bits, 1_000);
        let l = s.total_ledger();
        assert_eq!(l, VolumeLedger { generated: 5_000, delivered: 0, partial: 1_000, never_transferred: 4_000 });
        assert!(l.balances());
    }

    proptest::proptest! {
        #[test]
        fn conservation_and_exclusivity(
            volumes in proptest::collection::vec((1u64..50_000, 0u8..3, 0.0f64..500.0), 1..20),
            windows in proptest::collection::vec((0.0f64..900.0, 1.0f64..80.0, 0u8..3, 50.0f64..500.0), 0..12),
        ) {
            let kinds = [ProductKind::RawScene, ProductKind::ThematicMask, ProductKind::RoiChip];
            let products: Vec<(SatelliteId, DataProduct)> = volumes
                .iter()
                .enumerate()
                .map(|(i, (v, k, c))| (sat(), product(i as u64, kinds[*k as usize], *v, *c)))
                .collect();
            // keep windows disjoint per station
            let mut contacts: Vec<ContactPlan> = Vec::new();
            for (start, len, st, rate) in windows {
                let name = ["a", "b", "c"][st as usize];
                let c = contact(name, start, start + len, rate);
                if !contacts.iter().any(|o| o.station_id == c.station_id && o.window.overlaps(&c.window)) {
                    contacts.push(c);
                }
            }
            let out = simulate_transfers(products.clone(), &contacts, 1000.0).unwrap();
            for (_, p) in &products {
                let moved: u64 = out.records.iter().filter(|r| r.product_id == p.id).map(|r| r.bits).sum();
                let fin = out.products.iter().find(|x| x.id == p.id).unwrap();
                proptest::prop_assert_eq!(moved, fin.transferred_bits);
                proptest::prop_assert!(fin.transferred_bits <= fin.volume_bits);
                proptest::prop_assert_eq!(out.completion.contains_key(&p.id), fin.is_complete());
                let l = ledger_of(fin);
                proptest::prop_assert!(l.balances());
            }
            for r in &out.records {
                let inside = contacts.iter().any(|c| c.station_id == r.station_id && c.window.start <= r.start && r.end <= c.window.end);
                proptest::prop_assert!(inside, "{:?}", r);
                let expect = (r.end - r.start) * contacts.iter().find(|c| c.station_id == r.station_id && c.window.start <= r.start && r.end <= c.window.end).unwrap().rate_bps;
                proptest::prop_assert!((r.bits as f64 - expect).abs() <= 1.0 + 1e-9 * expect);
            }
            let mut spans: Vec<(f64, f64)> = out.records.iter().map(|r| (r.start, r.end)).collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                proptest::prop_assert!(w[0].1 <= w[1].0);
            }
        }

        #[test]
        fn faster_link_never_delays(
            volumes in proptest::collection::vec((1u64..50_000, 0.0f64..500.0), 1..10),
            gaps in proptest::collection::vec((5.0f64..100.0, 5.0f64..60.0), 1..8),
            rate in 50.0f64..400.0,
        ) {
            let products: Vec<(SatelliteId, DataProduct)> = volumes
                .iter()
                .enumerate()
                .map(|(i, (v, c))| (sat(), product(i as u64, ProductKind::RawScene, *v, *c)))
                .collect();
            let mut t = 0.0;
            let mut slow = Vec::new();
            let mut fast = Vec::new();
            for (gap, len) in gaps {
                t += gap;
                slow.push(contact("g", t, t + len, rate));
                fast.push(contact("g", t, t + len, rate * 2.0));
                t += len;
            }
            let a = simulate_transfers(products.clone(), &slow, 2000.0).unwrap();
            let b = simulate_transfers(products, &fast, 2000.0).unwrap();
            for (id, ta) in &a.completion {
                let tb = b.completion.get(id);
                proptest::prop_assert!(tb.is_some_and(|tb| *tb <= *ta + 1e-9), "{:?} {:?} {:?}", id, ta, tb);
            }
        }
    }
}
