"""CBR flows, per-packet records, and the aggregate metrics report."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .link import FrameKind


@dataclass(frozen=True)
class FlowConfig:
    src: int
    dst: int
    packet_size: int = 512
    interval: float = 0.25
    start: float = 10.0
    stop: float = 250.0

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("flow src and dst must differ")
        if self.interval <= 0:
            raise ValueError("flow interval must be positive")
        if not self.start < self.stop:
            raise ValueError("flow start must precede stop")
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")


def generate_cbr(flow: FlowConfig) -> list[float]:
    """Send instants start, start+interval, ... strictly before stop."""
    times = []
    k = 0
    while True:
        t = flow.start + k * flow.interval
        if t >= flow.stop:
            return times
        times.append(t)
        k += 1


class PacketRecord:
    __slots__ = ("pkt_id", "flow", "sent_at", "received_at", "hops", "dropped")

    def __init__(self, pkt_id: int, flow: int, sent_at: float):
        self.pkt_id = pkt_id
        self.flow = flow
        self.sent_at = sent_at
        self.received_at: float | None = None
        self.hops = 0
        self.dropped: str | None = None

    @property
    def delivered(self) -> bool:
        return self.received_at is not None

    @property
    def delay(self) -> float | None:
        return None if self.received_at is None else self.received_at - self.sent_at


class PacketLog:
    def __init__(self, flows):
        self.flows = list(flows)
        self.records: list[PacketRecord] = []
        self.duplicates = 0
        self.unknown = 0
        self.drop_reasons: dict[str, int] = {}

    def send(self, flow: int, now: float) -> int:
        pid = len(self.records)
        self.records.append(PacketRecord(pid, flow, now))
        return pid

    def record_delivery(self, pkt_id: int, now: float, hops: int) -> PacketRecord | None:
        if not 0 <= pkt_id < len(self.records):
            self.unknown += 1
            return None
        rec = self.records[pkt_id]
        if rec.received_at is not None:
            self.duplicates += 1
            return rec
        rec.received_at = now
        rec.hops = hops
        return rec

    def drop(self, pkt_id: int, reason: str) -> None:
        rec = self.records[pkt_id]
        if rec.received_at is None and rec.dropped is None:
            rec.dropped = reason
            self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1

    def flow_balance(self, flow: int) -> dict:
        sent = delivered = dropped = 0
        for r in self.records:
            if r.flow != flow:
                continue
            sent += 1
            if r.received_at is not None:
                delivered += 1
            elif r.dropped is not None:
                dropped += 1
        return {"sent": sent, "delivered": delivered, "dropped": dropped,
                "in_flight": sent - delivered - dropped}


@dataclass
class MetricsReport:
    variant: str = ""
    sent: int = 0
    delivered: int = 0
    lost: int = 0
    dropped: int = 0
    in_flight: int = 0
    delivery_ratio: float = math.nan
    avg_delay: float = math.nan  # nan when nothing was delivered
    throughput: float = 0.0      # bit/s over the measurement window
    control_overhead: int = 0    # control frame transmissions
    control_bytes: int = 0
    data_frames: int = 0
    data_bytes: int = 0
    traffic_load: float = 0.0    # (control + data) transmissions per second
    window: float = 0.0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]


TRAFFIC_LOAD_DEFINITION = "traffic_load = (control + data) frame transmissions per second of the measurement window"


def report(packets: PacketLog, frame_log, window: tuple[float, float], variant: str = "") -> MetricsReport:
    """Aggregate packet and frame records.

    ``frame_log`` rows are ``(time, uid, kind, src, dst, size, outcome, ...)``;
    ``window`` is the ``(start, end)`` interval throughput and load refer to.
    """
    t0, t1 = window
    span = t1 - t0
    if span <= 0:
        raise ValueError("measurement window must have positive length")
    recs = packets.records
    sent = len(recs)
    delivered = [r for r in recs if r.received_at is not None]
    dropped = sum(1 for r in recs if r.received_at is None and r.dropped is not None)
    bits = sum(packets.flows[r.flow].packet_size * 8 for r in delivered)
    ctrl = ctrl_bytes = data = data_bytes = in_window = 0
    data_kind = int(FrameKind.DATA)
    for row in frame_log:
        if row[2] == data_kind:
            data += 1
            data_bytes += row[5]
        else:
            ctrl += 1
            ctrl_bytes += row[5]
        if t0 <= row[0] <= t1:
            in_window += 1
    n_del = len(delivered)
    return MetricsReport(
        variant=variant,
        sent=sent,
        delivered=n_del,
        lost=sent - n_del,
        dropped=dropped,
        in_flight=sent - n_del - dropped,
        delivery_ratio=(n_del / sent) if sent else math.nan,
        avg_delay=(sum(r.received_at - r.sent_at for r in delivered) / n_del) if n_del else math.nan,
        throughput=bits / span,
        control_overhead=ctrl,
        control_bytes=ctrl_bytes,
        data_frames=data,
        data_bytes=data_bytes,
        traffic_load=in_window / span,
        window=span,
    )
