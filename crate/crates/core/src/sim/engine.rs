//! Event loop of one simulation run.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::stats::{NodeCounters, RunStats, SourceCounters};
use crate::math;
use crate::model::{NetworkModel, NodeId};
use crate::params::{seconds_to_symbols, ProtocolParams};

/// Event kinds; the discriminant order breaks ties at equal time and node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    TxEnd,
    TxStart,
    CcaEnd,
    Cca,
    Arrival,
}

type Event = Reverse<(u64, NodeId, Kind)>;

#[derive(Debug, Clone, Copy)]
struct Packet {
    source: NodeId,
    created: u64,
    /// Time the packet joined the current node's queue.
    arrived: u64,
}

#[derive(Debug, Default)]
struct Mac {
    queue: VecDeque<Packet>,
    /// Busy CCAs in the current transmission attempt.
    nb: u32,
    /// CCAs in the current transmission attempt.
    ccas: u32,
    /// Channel state sampled when the running CCA began.
    cca_busy: bool,
    transmissions: u32,
    collided: bool,
    on_air: (u64, u64),
    nonempty_since: u64,
}

pub(super) struct Engine<'a> {
    model: &'a NetworkModel,
    params: &'a ProtocolParams,
    rng: ChaCha8Rng,
    now: u64,
    warmup: u64,
    end: u64,
    t_tx: u64,
    /// `interferes[i * n + k]`: `k` belongs to the interference set of `i`'s receiver.
    interferes: Vec<bool>,
    /// Per-symbol arrival rate of each node.
    lambda: Vec<f64>,
    macs: Vec<Mac>,
    active: Vec<NodeId>,
    events: BinaryHeap<Event>,
    nodes: Vec<NodeCounters>,
    sources: Vec<SourceCounters>,
    source_slot: Vec<usize>,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        model: &'a NetworkModel,
        params: &'a ProtocolParams,
        rng: ChaCha8Rng,
        warmup_s: f64,
        duration_s: f64,
    ) -> Self {
        let n = model.len();
        let mut interferes = vec![false; n * n];
        for i in 0..n {
            for &k in &model.hood.interference[i] {
                interferes[i * n + k] = true;
            }
        }
        let mut source_slot = vec![usize::MAX; n];
        let mut sources = Vec::new();
        for s in model.sources() {
            source_slot[s] = sources.len();
            sources.push(SourceCounters {
                node: s,
                ..Default::default()
            });
        }
        Self {
            model,
            params,
            rng,
            now: 0,
            warmup: seconds_to_symbols(warmup_s) as u64,
            end: seconds_to_symbols(duration_s) as u64,
            t_tx: params.t_tx() as u64,
            interferes,
            lambda: model
                .nodes
                .iter()
                .map(|s| crate::params::per_second_to_per_symbol(s.lambda_pps))
                .collect(),
            macs: (0..n).map(|_| Mac::default()).collect(),
            active: Vec::new(),
            events: BinaryHeap::new(),
            nodes: vec![NodeCounters::default(); n],
            sources,
            source_slot,
        }
    }

    fn schedule(&mut self, at: u64, node: NodeId, kind: Kind) {
        debug_assert!(at >= self.now, "event scheduled in the past");
        self.events.push(Reverse((at, node, kind)));
    }

    fn measuring(&self, t: u64) -> bool {
        t >= self.warmup
    }

    /// Length of `[from, to)` inside the measurement window.
    fn window_overlap(&self, from: u64, to: u64) -> u64 {
        let lo = from.max(self.warmup);
        let hi = to.min(self.end);
        hi.saturating_sub(lo)
    }

    fn next_arrival(&mut self, i: NodeId) {
        let rate = self.lambda[i];
        if rate <= 0.0 {
            return;
        }
        let u: f64 = self.rng.gen();
        let gap = -math::ln(1.0 - u) / rate;
        let at = self.now.saturating_add(math::ceil(gap) as u64);
        if at <= self.end {
            self.schedule(at, i, Kind::Arrival);
        }
    }

    fn start_backoff(&mut self, i: NodeId, from: u64) {
        let be = self.params.backoff_exponent(self.macs[i].nb);
        let slots = self.rng.gen_range(0..(1u64 << be));
        self.schedule(from + slots * self.params.slot as u64, i, Kind::Cca);
    }

    fn enqueue(&mut self, i: NodeId, packet: Packet) {
        let mac = &mut self.macs[i];
        mac.queue.push_back(packet);
        if mac.queue.len() == 1 {
            mac.nonempty_since = self.now;
            self.begin_hol(i, self.now);
        }
    }

    fn begin_hol(&mut self, i: NodeId, at: u64) {
        let mac = &mut self.macs[i];
        mac.nb = 0;
        mac.ccas = 0;
        mac.transmissions = 0;
        self.start_backoff(i, at);
    }

    /// Removes the head-of-line packet at `at` and starts on the next one.
    fn finish_hol(&mut self, i: NodeId, at: u64, discarded: bool) -> Packet {
        let mac = &mut self.macs[i];
        let packet = mac.queue.pop_front().expect("head-of-line packet");
        let c = &mut self.nodes[i];
        c.max_transmissions_per_packet = c.max_transmissions_per_packet.max(mac.transmissions);
        if at >= self.warmup {
            c.hol_packets += 1;
            if discarded {
                c.discards += 1;
            }
        }
        if mac.queue.is_empty() {
            let since = mac.nonempty_since;
            self.nodes[i].nonempty_time += self.window_overlap(since, at);
        } else {
            self.begin_hol(i, at);
        }
        if discarded {
            let slot = self.source_slot[packet.source];
            let s = &mut self.sources[slot];
            s.all_discarded += 1;
            if packet.created >= self.warmup {
                s.discarded += 1;
            }
        }
        packet
    }

    fn on_arrival(&mut self, i: NodeId) {
        let now = self.now;
        let slot = self.source_slot[i];
        self.sources[slot].all_generated += 1;
        if self.measuring(now) {
            self.sources[slot].generated += 1;
        }
        self.enqueue(
            i,
            Packet {
                source: i,
                created: now,
                arrived: now,
            },
        );
        self.next_arrival(i);
    }

    /// True when a sensed node is on air at instant `at`.
    fn channel_busy(&self, i: NodeId, at: u64) -> bool {
        self.model
            .omega(i)
            .iter()
            .any(|&j| self.macs[j].on_air.0 <= at && at < self.macs[j].on_air.1)
    }

    fn on_cca(&mut self, i: NodeId) {
        let now = self.now;
        let busy = self.channel_busy(i, now);
        let mac = &mut self.macs[i];
        mac.ccas += 1;
        mac.cca_busy = busy;
        let ccas = mac.ccas;
        let c = &mut self.nodes[i];
        c.max_ccas_per_transmission = c.max_ccas_per_transmission.max(ccas);
        if now >= self.warmup {
            c.ccas += 1;
            if busy {
                c.busy_ccas += 1;
            }
        }
        self.schedule(now + self.params.cca_duration as u64, i, Kind::CcaEnd);
    }

    fn on_cca_end(&mut self, i: NodeId) {
        let now = self.now;
        let busy = self.macs[i].cca_busy;
        if !busy {
            self.schedule(now + self.params.turnaround as u64, i, Kind::TxStart);
            return;
        }
        let mac = &mut self.macs[i];
        mac.nb += 1;
        if mac.nb >= self.params.cca_attempts() {
            if now >= self.warmup {
                self.nodes[i].cca_discards += 1;
            }
            self.finish_hol(i, now, true);
        } else {
            self.start_backoff(i, now);
        }
    }

    fn on_tx_start(&mut self, i: NodeId) {
        let now = self.now;
        let n = self.model.len();
        let macs = &self.macs;
        self.active.retain(|&k| macs[k].on_air.1 > now);
        let mut collided = false;
        for &k in &self.active {
            if self.interferes[i * n + k] {
                collided = true;
            }
            if self.interferes[k * n + i] {
                self.macs[k].collided = true;
            }
        }
        let mac = &mut self.macs[i];
        mac.collided = collided;
        mac.on_air = (now, now + self.t_tx);
        mac.transmissions += 1;
        self.active.push(i);
        self.nodes[i].transmit_time += self.window_overlap(now, now + self.t_tx);
        self.schedule(now + self.t_tx, i, Kind::TxEnd);
    }

    fn on_tx_end(&mut self, i: NodeId) {
        let now = self.now;
        let per = self.model.nodes[i].link_per;
        let failed = self.macs[i].collided || (per > 0.0 && self.rng.gen::<f64>() < per);
        if now >= self.warmup {
            let c = &mut self.nodes[i];
            c.transmissions += 1;
            if failed {
                c.failed_transmissions += 1;
            }
        }
        if failed {
            if self.macs[i].transmissions >= self.params.max_transmissions() {
                self.finish_hol(i, now, true);
            } else {
                self.macs[i].nb = 0;
                self.macs[i].ccas = 0;
                self.start_backoff(i, now);
            }
            return;
        }

        let packet = self.finish_hol(i, now, false);
        if packet.arrived >= self.warmup {
            let c = &mut self.nodes[i];
            c.forwarded += 1;
            c.sojourn_total += now - packet.arrived;
        }
        let parent = self.model.parent[i].expect("transmitting node has a parent");
        if parent == self.model.bs {
            let slot = self.source_slot[packet.source];
            let s = &mut self.sources[slot];
            s.all_delivered += 1;
            if packet.created >= self.warmup {
                s.delivered += 1;
                s.delay_total += now - packet.created;
            }
        } else {
            self.enqueue(
                parent,
                Packet {
                    arrived: now,
                    ..packet
                },
            );
        }
    }

    pub(super) fn run(mut self, seed: u64) -> RunStats {
        for i in self.model.sources().collect::<Vec<_>>() {
            self.next_arrival(i);
        }
        while let Some(Reverse((t, i, kind))) = self.events.pop() {
            if t > self.end {
                break;
            }
            debug_assert!(t >= self.now);
            self.now = t;
            match kind {
                Kind::Arrival => self.on_arrival(i),
                Kind::Cca => self.on_cca(i),
                Kind::CcaEnd => self.on_cca_end(i),
                Kind::TxStart => self.on_tx_start(i),
                Kind::TxEnd => self.on_tx_end(i),
            }
        }
        for i in 0..self.model.len() {
            let mac = &self.macs[i];
            if !mac.queue.is_empty() {
                let since = mac.nonempty_since;
                self.nodes[i].nonempty_time += self.window_overlap(since, self.end);
            }
            for p in &mac.queue {
                self.sources[self.source_slot[p.source]].all_in_flight += 1;
            }
        }
        RunStats {
            seed,
            window: self.end.saturating_sub(self.warmup),
            nodes: self.nodes,
            sources: self.sources,
        }
    }
}
