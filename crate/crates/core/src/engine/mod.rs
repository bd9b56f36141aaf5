//! Discrete-event kernel and the end-to-end run loop.
//!
//! One run owns all mutable state and processes a single future-event list in
//! strict `(time, seq)` order. Random draws come from counter-based streams
//! keyed per entity, so switching the processing architecture never changes
//! the fire events, the acquisitions or their cloud cover.

mod queue;
mod rng;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::queue::EventQueue;
pub use self::rng::{entity_key, rng_stream, RngStream, RngStreams, StreamDomain};

use crate::downlink::{DownlinkError, DownlinkScheduler, Segment, StepOutcome, TransferRecord, VolumeLedger};
use crate::events::{generate_fire_events, monitoring_detection_time, FireEvent};
use crate::ground::{pdgs_latency, pdgs_process, Marketplace, MarketplaceRecord};
use crate::model::{
    validate_scenario, AoiId, DataProduct, EventId, ProcessingLocation, ProductId, RequestId, SatelliteId, Scenario,
    SceneId, SimTime, Violation,
};
use crate::onboard::{acquire_scene, build_products, classify_scene, ArchitectureMode, DetectionOutcome, OnboardError, Scene};
use crate::orbit::{Geometry, Window};
use crate::tasking::{periodic_acquisitions_from, request_for_event, ObservationRequest, Opportunity, Planner, TaskingPlan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("scenario is invalid ({} violations)", .0.len())]
    InvalidScenario(Vec<Violation>),
    #[error(transparent)]
    Onboard(#[from] OnboardError),
    #[error(transparent)]
    Downlink(#[from] DownlinkError),
    #[error("injected event {0} starts outside the horizon")]
    EventOutsideHorizon(EventId),
    #[error("duplicate injected event id {0}")]
    DuplicateEvent(EventId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimEventKind {
    FireStart,
    MonitoringDetection,
    Uplink,
    Acquisition,
    PipelineDone,
    ContactOpen,
    ContactClose,
    TransferDone,
    PdgsDone,
    Delivery,
    SimEnd,
}

#[derive(Debug, Clone)]
enum Payload {
    FireStart,
    MonitoringDetection(usize),
    Uplink(RequestId),
    Acquisition(usize),
    PipelineDone(ProductId),
    ContactOpen { sat: usize, station: usize, window: usize },
    ContactClose { sat: usize, station: usize },
    TransferDone { sat: usize, generation: u64 },
    PdgsDone(ProductId),
    Delivery(ProductId),
    SimEnd,
}

impl Payload {
    fn kind(&self) -> SimEventKind {
        match self {
            Payload::FireStart => SimEventKind::FireStart,
            Payload::MonitoringDetection(_) => SimEventKind::MonitoringDetection,
            Payload::Uplink(_) => SimEventKind::Uplink,
            Payload::Acquisition(_) => SimEventKind::Acquisition,
            Payload::PipelineDone(_) => SimEventKind::PipelineDone,
            Payload::ContactOpen { .. } => SimEventKind::ContactOpen,
            Payload::ContactClose { .. } => SimEventKind::ContactClose,
            Payload::TransferDone { .. } => SimEventKind::TransferDone,
            Payload::PdgsDone(_) => SimEventKind::PdgsDone,
            Payload::Delivery(_) => SimEventKind::Delivery,
            Payload::SimEnd => SimEventKind::SimEnd,
        }
    }
}

/// A processed event as it appears in the trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: SimEventKind,
}

/// Per fire event milestones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMilestones {
    pub event_id: EventId,
    pub start: SimTime,
    pub aoi_id: Option<AoiId>,
    pub monitoring_detection: Option<SimTime>,
    pub request_id: Option<RequestId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub scene_id: SceneId,
    pub satellite_id: SatelliteId,
    pub aoi_id: AoiId,
    pub window: Window,
    pub cloud_fraction: f64,
    /// Set when at least one observation request was assigned to this pass.
    pub tasked: bool,
}

/// Life of one data product from onboard creation to delivery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTrace {
    pub product: DataProduct,
    pub satellite_id: SatelliteId,
    pub aoi_id: AoiId,
    pub acquired: SimTime,
    pub downlinked: Option<SimTime>,
    pub pdgs_done: Option<SimTime>,
    pub delivered: Option<SimTime>,
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub scenario: String,
    pub seed: u64,
    pub horizon_s: f64,
    pub mode: ArchitectureMode,
    pub mmu_ha: f64,
    pub events: Vec<FireEvent>,
    pub milestones: Vec<EventMilestones>,
    pub requests: Vec<ObservationRequest>,
    pub plan: TaskingPlan,
    pub uplinks: Vec<(RequestId, SimTime)>,
    pub dropped_events: Vec<EventId>,
    pub acquisitions: Vec<Acquisition>,
    pub scenes: Vec<Scene>,
    pub outcomes: Vec<DetectionOutcome>,
    pub products: Vec<ProductTrace>,
    pub transfers: Vec<TransferRecord>,
    pub marketplace: Vec<MarketplaceRecord>,
    /// Products without a marketplace record at the horizon.
    pub undelivered: Vec<ProductId>,
    /// Products still onboard at the horizon, per satellite in queue order.
    pub queue_residue: BTreeMap<SatelliteId, Vec<ProductId>>,
    pub volume: VolumeLedger,
    pub log: Vec<SimEvent>,
}

impl SimulationTrace {
    pub fn product(&self, id: ProductId) -> Option<&ProductTrace> {
        self.products.binary_search_by(|p| p.product.id.cmp(&id)).ok().map(|i| &self.products[i])
    }

    pub fn event(&self, id: EventId) -> Option<&FireEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn scene(&self, id: SceneId) -> Option<&Scene> {
        self.scenes.iter().find(|s| s.id == id)
    }
}

/// Overrides for a single run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Processing architecture; defaults to the archetype's location.
    pub mode: Option<ArchitectureMode>,
    /// Fixed event trace replacing generated events.
    pub events: Option<&'a [FireEvent]>,
    /// Reuse visibility computed for the same satellites, stations, AOIs,
    /// horizon and step.
    pub geometry: Option<&'a Geometry>,
}

pub fn default_mode(scenario: &Scenario) -> ArchitectureMode {
    match scenario.archetype.processing_location {
        ProcessingLocation::Ground => ArchitectureMode::RawOnly,
        ProcessingLocation::Hybrid => ArchitectureMode::Hybrid,
    }
}

/// Runs the scenario with its own archetype and generated events.
pub fn run(scenario: &Scenario) -> Result<SimulationTrace, EngineError> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: RunOptions<'_>) -> Result<SimulationTrace, EngineError> {
    let violations = validate_scenario(scenario);
    if !violations.is_empty() {
        return Err(EngineError::InvalidScenario(violations));
    }
    let streams = RngStreams::new(scenario.seed);
    let events = match options.events {
        Some(e) => {
            let mut ids = BTreeSet::new();
            for ev in e {
                if !(ev.start_s >= 0.0 && ev.start_s <= scenario.horizon_s) {
                    return Err(EngineError::EventOutsideHorizon(ev.id));
                }
                if !ids.insert(ev.id) {
                    return Err(EngineError::DuplicateEvent(ev.id));
                }
            }
            let mut v = e.to_vec();
            v.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.id.cmp(&b.id)));
            v
        }
        None => generate_fire_events(&scenario.event_model, &scenario.aois, scenario.horizon_s, &streams),
    };
    let owned;
    let geometry = match options.geometry {
        Some(g) => g,
        None => {
            owned = Geometry::compute(scenario);
            &owned
        }
    };
    let mode = options.mode.unwrap_or_else(|| default_mode(scenario));
    Sim::new(scenario, geometry, streams, events, mode).run()
}

/// Stable stream entity for an acquisition, independent of processing order.
fn scene_entity(sat: &SatelliteId, aoi: &AoiId, start: SimTime) -> u64 {
    entity_key(sat.as_str()).rotate_left(21) ^ entity_key(aoi.as_str()) ^ start.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct ProductState {
    satellite: usize,
    aoi_id: AoiId,
    acquired: SimTime,
    downlinked: Option<SimTime>,
    pdgs_done: Option<SimTime>,
    delivered: Option<SimTime>,
}

struct Sim<'a> {
    scenario: &'a Scenario,
    geometry: &'a Geometry,
    streams: RngStreams,
    mode: ArchitectureMode,
    events: Vec<FireEvent>,
    queue: EventQueue<Payload>,
    planner: Planner<'a>,
    opportunities: Vec<Opportunity>,
    scheduled: BTreeMap<(usize, usize, u64), usize>,
    tasked: BTreeSet<usize>,
    downlink: DownlinkScheduler,
    marketplace: Marketplace,
    pending: BTreeMap<ProductId, DataProduct>,
    states: BTreeMap<ProductId, ProductState>,
    next_product: u64,
    next_scene: u64,
    next_request: u64,
    trace: SimulationTrace,
}

impl<'a> Sim<'a> {
    fn new(
        scenario: &'a Scenario,
        geometry: &'a Geometry,
        streams: RngStreams,
        events: Vec<FireEvent>,
        mode: ArchitectureMode,
    ) -> Self {
        let milestones = events
            .iter()
            .map(|e| EventMilestones {
                event_id: e.id,
                start: e.start_s,
                aoi_id: crate::tasking::containing_aoi(e, &scenario.aois).map(|a| a.id.clone()),
                monitoring_detection: None,
                request_id: None,
            })
            .collect();
        Sim {
            scenario,
            geometry,
            streams,
            mode,
            queue: EventQueue::new(),
            planner: Planner::new(&scenario.satellites, &scenario.stations, &scenario.aois, geometry),
            opportunities: Vec::new(),
            scheduled: BTreeMap::new(),
            tasked: BTreeSet::new(),
            downlink: DownlinkScheduler::new(),
            marketplace: Marketplace::new(),
            pending: BTreeMap::new(),
            states: BTreeMap::new(),
            next_product: 0,
            next_scene: 0,
            next_request: 0,
            trace: SimulationTrace {
                scenario: scenario.name.clone(),
                seed: scenario.seed,
                horizon_s: scenario.horizon_s,
                mode,
                mmu_ha: scenario.archetype.mmu_ha,
                events: events.clone(),
                milestones,
                requests: Vec::new(),
                plan: TaskingPlan::default(),
                uplinks: Vec::new(),
                dropped_events: Vec::new(),
                acquisitions: Vec::new(),
                scenes: Vec::new(),
                outcomes: Vec::new(),
                products: Vec::new(),
                transfers: Vec::new(),
                marketplace: Vec::new(),
                undelivered: Vec::new(),
                queue_residue: BTreeMap::new(),
                volume: VolumeLedger::default(),
                log: Vec::new(),
            },
            events,
        }
    }

    fn horizon(&self) -> SimTime {
        self.scenario.horizon_s
    }

    /// Schedules inside the horizon only; returns whether it was scheduled.
    fn schedule(&mut self, time: SimTime, payload: Payload) -> bool {
        if time > self.horizon() {
            return false;
        }
        self.queue.push(time, payload);
        true
    }

    fn schedule_segment(&mut self, seg: Option<Segment>) {
        if let Some(seg) = seg {
            let sat = self.sat_index(&seg.satellite_id);
            self.schedule(seg.at, Payload::TransferDone { sat, generation: seg.generation });
        }
    }

    fn sat_index(&self, id: &SatelliteId) -> usize {
        self.scenario.satellites.iter().position(|s| &s.id == id).expect("known satellite")
    }

    fn add_opportunity(&mut self, sat: usize, aoi: usize, window: Window) -> usize {
        let key = (sat, aoi, window.start.to_bits());
        if let Some(&i) = self.scheduled.get(&key) {
            return i;
        }
        let i = self.opportunities.len();
        self.opportunities.push(Opportunity {
            satellite_id: self.scenario.satellites[sat].id.clone(),
            aoi_id: self.scenario.aois[aoi].id.clone(),
            window,
        });
        self.scheduled.insert(key, i);
        self.schedule(window.start, Payload::Acquisition(i));
        i
    }

    fn seed_queue(&mut self) {
        let s = self.scenario;
        for i in 0..self.events.len() {
            self.schedule(self.events[i].start_s, Payload::FireStart);
        }
        if s.archetype.triggering.is_event_based() {
            for i in 0..self.events.len() {
                let t = monitoring_detection_time(&self.events[i], s.monitoring_delay_s);
                self.schedule(t, Payload::MonitoringDetection(i));
            }
        }
        for o in periodic_acquisitions_from(&s.archetype, &s.satellites, &s.aois, self.geometry) {
            let sat = self.sat_index(&o.satellite_id);
            let aoi = s.aois.iter().position(|a| a.id == o.aoi_id).expect("known aoi");
            self.add_opportunity(sat, aoi, o.window);
        }
        for sat in 0..s.satellites.len() {
            for station in 0..s.stations.len() {
                for (w, win) in self.geometry.contacts[sat][station].iter().enumerate() {
                    self.schedule(win.start, Payload::ContactOpen { sat, station, window: w });
                    self.schedule(win.end, Payload::ContactClose { sat, station });
                }
            }
        }
    }

    fn run(mut self) -> Result<SimulationTrace, EngineError> {
        self.seed_queue();
        let mut ended = false;
        while !ended {
            let (now, seq, payload) = match self.queue.pop() {
                Some(e) => e,
                None => {
                    // nothing is ever scheduled past the horizon
                    let end = self.horizon();
                    self.queue.push(end, Payload::SimEnd);
                    continue;
                }
            };
            self.trace.log.push(SimEvent { time: now, seq, kind: payload.kind() });
            match payload {
                Payload::FireStart => {}
                Payload::MonitoringDetection(i) => self.on_monitoring(i, now),
                Payload::Uplink(id) => self.trace.uplinks.push((id, now)),
                Payload::Acquisition(i) => self.on_acquisition(i, now)?,
                Payload::PipelineDone(id) => {
                    let product = self.pending.remove(&id).expect("pending product");
                    let sat = self.scenario.satellites[self.states[&id].satellite].id.clone();
                    let seg = self.downlink.enqueue(&sat, product, now)?;
                    self.schedule_segment(seg);
                }
                Payload::ContactOpen { sat, station, window } => {
                    let st = &self.scenario.stations[station];
                    let win = self.geometry.contacts[sat][station][window];
                    let seg = self.downlink.open_contact(
                        &self.scenario.satellites[sat].id,
                        &st.id,
                        &win,
                        st.xband_rate_bps(),
                        now,
                    );
                    self.schedule_segment(seg);
                }
                Payload::ContactClose { sat, station } => {
                    let out = self.downlink.close_contact(
                        &self.scenario.satellites[sat].id,
                        &self.scenario.stations[station].id,
                        now,
                    );
                    self.on_step(out);
                }
                Payload::TransferDone { sat, generation } => {
                    let id = self.scenario.satellites[sat].id.clone();
                    if let Some(out) = self.downlink.segment_end(&id, generation, now) {
                        self.on_step(out);
                    }
                }
                Payload::PdgsDone(id) => {
                    let st = self.states.get_mut(&id).expect("product state");
                    st.pdgs_done = Some(now);
                    let kind = self.downlink.product(id).expect("downlinked product").kind;
                    let downlinked = st.downlinked.expect("downlinked before processing");
                    let at = pdgs_process(kind, downlinked, &self.scenario.latencies, &self.scenario.archetype);
                    self.schedule(at.max(now), Payload::Delivery(id));
                }
                Payload::Delivery(id) => {
                    let product = self.downlink.product(id).expect("downlinked product");
                    self.marketplace.deliver(product, now).expect("one delivery per product");
                    self.states.get_mut(&id).expect("product state").delivered = Some(now);
                }
                Payload::SimEnd => {
                    for (id, t) in self.downlink.finish(now) {
                        self.states.get_mut(&id).expect("product state").downlinked = Some(t);
                    }
                    ended = true;
                }
            }
        }
        Ok(self.into_trace())
    }

    fn on_monitoring(&mut self, i: usize, now: SimTime) {
        let id = RequestId(self.next_request);
        let Some(request) = request_for_event(id, &self.events[i], &self.scenario.aois, self.scenario.monitoring_delay_s)
        else {
            self.trace.dropped_events.push(self.events[i].id);
            return;
        };
        self.next_request += 1;
        self.trace.milestones[i].monitoring_detection = Some(now);
        self.trace.milestones[i].request_id = Some(id);
        match self.planner.assign(&request) {
            Some(a) => {
                let sat = self.sat_index(&a.satellite_id);
                let aoi = self.scenario.aois.iter().position(|x| x.id == a.aoi_id).expect("known aoi");
                self.schedule(a.uplink_time, Payload::Uplink(id));
                let opp = self.add_opportunity(sat, aoi, a.window);
                self.tasked.insert(opp);
                self.trace.plan.assignments.push(a);
            }
            None => self.trace.plan.unmet.push(id),
        }
        self.trace.requests.push(request);
    }

    fn on_acquisition(&mut self, i: usize, now: SimTime) -> Result<(), EngineError> {
        let s = self.scenario;
        let opp = self.opportunities[i].clone();
        let sat_idx = self.sat_index(&opp.satellite_id);
        let sat = &s.satellites[sat_idx];
        let aoi = s.aoi(&opp.aoi_id).expect("known aoi");
        let entity = scene_entity(&opp.satellite_id, &opp.aoi_id, opp.window.start);
        let scene_id = SceneId(self.next_scene);
        self.next_scene += 1;

        let mut clouds = self.streams.stream(StreamDomain::Clouds, entity);
        let scene = acquire_scene(scene_id, &opp, aoi, &self.events, &s.cloud_model, &mut clouds);
        let mut det = self.streams.stream(StreamDomain::Detection, entity);
        let mut fp = self.streams.stream(StreamDomain::FalsePositives, entity);
        let outcome = classify_scene(
            &scene,
            &self.events,
            s.archetype.mmu_ha,
            s.onboard.accuracy,
            s.onboard.fp_rate_per_scene,
            &mut det,
            &mut fp,
        );
        let products = build_products(
            &scene,
            &outcome,
            sat,
            &self.events,
            self.mode,
            &s.cloud_model,
            &s.onboard,
            s.archetype.mmu_ha,
            &mut self.next_product,
        )?;

        self.trace.acquisitions.push(Acquisition {
            scene_id,
            satellite_id: opp.satellite_id.clone(),
            aoi_id: opp.aoi_id.clone(),
            window: opp.window,
            cloud_fraction: scene.cloud_fraction,
            tasked: self.tasked.contains(&i),
        });
        for p in products {
            self.states.insert(
                p.id,
                ProductState {
                    satellite: sat_idx,
                    aoi_id: opp.aoi_id.clone(),
                    acquired: now,
                    downlinked: None,
                    pdgs_done: None,
                    delivered: None,
                },
            );
            // products finishing onboard after the horizon stay pending
            self.schedule(p.created.max(now), Payload::PipelineDone(p.id));
            self.pending.insert(p.id, p);
        }
        self.trace.scenes.push(scene);
        self.trace.outcomes.push(outcome);
        Ok(())
    }

    fn on_step(&mut self, out: StepOutcome) {
        if let Some((id, t)) = out.completed {
            let kind = self.downlink.product(id).expect("downlinked product").kind;
            self.states.get_mut(&id).expect("product state").downlinked = Some(t);
            self.schedule(t + pdgs_latency(kind, &self.scenario.latencies), Payload::PdgsDone(id));
        }
        self.schedule_segment(out.next);
    }

    fn into_trace(mut self) -> SimulationTrace {
        // products still in the onboard pipeline never reached the queue
        let mut all: BTreeMap<ProductId, DataProduct> = core::mem::take(&mut self.pending);
        for p in self.downlink.products() {
            all.insert(p.id, p.clone());
        }
        let mut ledger = self.downlink.total_ledger();
        for p in all.values() {
            if self.downlink.product(p.id).is_none() {
                ledger += VolumeLedger {
                    generated: p.volume_bits,
                    delivered: 0,
                    partial: 0,
                    never_transferred: p.volume_bits,
                };
            }
        }
        let mut residue = self.downlink.residue();
        for (id, p) in &all {
            if self.downlink.product(*id).is_none() {
                let sat = self.scenario.satellites[self.states[id].satellite].id.clone();
                residue.entry(sat).or_default().push(p.id);
            }
        }

        let products: Vec<ProductTrace> = all
            .into_values()
            .map(|product| {
                let st = &self.states[&product.id];
                ProductTrace {
                    satellite_id: self.scenario.satellites[st.satellite].id.clone(),
                    aoi_id: st.aoi_id.clone(),
                    acquired: st.acquired,
                    downlinked: st.downlinked,
                    pdgs_done: st.pdgs_done,
                    delivered: st.delivered,
                    product,
                }
            })
            .collect();
        let undelivered = products.iter().filter(|p| p.delivered.is_none()).map(|p| p.product.id).collect();

        let mut trace = self.trace;
        trace.transfers = self.downlink.records().to_vec();
        trace.marketplace = self.marketplace.sorted_records();
        trace.products = products;
        trace.undelivered = undelivered;
        trace.queue_residue = residue;
        trace.volume = ledger;
        trace
    }
}
