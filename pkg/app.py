"""
app.py - EdgeSplit Explorer
Streamlit dashboard over the partitioning model: layer demand, per-cut
throughput/energy profiles, optimum partitions, bandwidth sweeps and a small
codec lab on synthetic features.

Run with:
    streamlit run app.py
"""

from pathlib import Path

import pandas as pd
import streamlit as st

# ─────────────────────────────────────────────────────────────────────────────
#  PAGE CONFIG  (must be first Streamlit call)
# ─────────────────────────────────────────────────────────────────────────────
st.set_page_config(
    page_title="EdgeSplit Explorer",
    page_icon="📡",
    layout="wide",
    initial_sidebar_state="expanded",
)

# ─────────────────────────────────────────────────────────────────────────────
#  DESIGN SYSTEM: CSS
# ─────────────────────────────────────────────────────────────────────────────
st.markdown("""
<style>
:root {
  --bg-card:        #111827;
  --border-subtle:  #2A3446;
  --text-muted:     #6B7280;
  --primary:        #3B82F6;
  --font-mono:      'DM Mono', ui-monospace, monospace;
}
.es-header { display:flex; justify-content:space-between; align-items:flex-end;
             padding:0.9rem 1.2rem; margin-bottom:1rem;
             border:1px solid var(--border-subtle); border-radius:10px; background:var(--bg-card); }
.es-logo   { font-family:var(--font-mono); font-size:1.35rem; font-weight:500; }
.es-logo span { color:var(--primary); }
.es-tagline { font-size:0.75rem; color:var(--text-muted); }
.es-badge  { font-family:var(--font-mono); font-size:0.7rem; color:var(--text-muted); }
.es-section-label { font-family:var(--font-mono); font-size:0.7rem; letter-spacing:0.08em;
                    text-transform:uppercase; color:var(--text-muted); margin:1.1rem 0 0.4rem 0; }
</style>
""", unsafe_allow_html=True)


# ─────────────────────────────────────────────────────────────────────────────
#  BACKEND IMPORTS
# ─────────────────────────────────────────────────────────────────────────────
from curves import VARIANTS, load_curves
from featcodec import encode_lossless, encode_lossy, feature_stats
from hwmodel import load_channel, load_hardware
from netmodel import demand_table, load_network
from pipeline import ENCODING_MODES, LOSSLESS, LOSSY, NONE, profile
from planner import DEFAULT_MAX_LOSS_PCT, OBJECTIVES, THROUGHPUT, headline, optimize_partition, sweep
from synth import SynthSpec, generate

DATA_DIR = Path(__file__).resolve().parent / "data"
NETWORKS = {"AlexNet": "alexnet.net", "VGG-16": "vgg16.net", "ResNet-50": "resnet50.net"}


# ─────────────────────────────────────────────────────────────────────────────
#  UTILITIES
# ─────────────────────────────────────────────────────────────────────────────
@st.cache_resource(show_spinner="Loading model files…")
def load_inputs(net_file: str):
    return (
        load_network(DATA_DIR / net_file),
        load_hardware(DATA_DIR / "edge28nm.hw"),
        load_channel(DATA_DIR / "nlink.ch"),
        load_curves(DATA_DIR / "alexnet.curves"),
    )


def section_label(icon: str, text: str) -> None:
    st.markdown(f'<div class="es-section-label">{icon}&nbsp; {text}</div>', unsafe_allow_html=True)


def fmt_bytes(n: float) -> str:
    if n >= 1_000_000:
        return f"{n / 1_000_000:.2f} MB"
    if n >= 1_000:
        return f"{n / 1_000:.1f} kB"
    return f"{n:.0f} B"


def fmt_rate(bps: float) -> str:
    return f"{bps / 1e6:g} Mbps"


# ─────────────────────────────────────────────────────────────────────────────
#  SIDEBAR
# ─────────────────────────────────────────────────────────────────────────────
with st.sidebar:
    st.markdown("### Edge<span style='color:#3B82F6'>Split</span>", unsafe_allow_html=True)
    st.divider()

    net_label = st.selectbox("Network", list(NETWORKS), index=0)
    net, hw_base, ch_base, curves = load_inputs(NETWORKS[net_label])

    mode_labels = [f"{fmt_rate(rate)} · {power * 1e3:.1f} mW" for rate, power in ch_base.modes]
    mode_index = st.radio("Radio mode", range(len(mode_labels)),
                          index=ch_base.selected_mode, format_func=lambda i: mode_labels[i])
    ch = ch_base.with_mode(mode_index)

    objective = st.radio("Objective", OBJECTIVES, index=0, horizontal=True)
    max_loss = st.slider("Accuracy loss bound (%)", 0.0, 5.0, DEFAULT_MAX_LOSS_PCT, 0.1)
    variant = st.selectbox("Host partition", VARIANTS, index=0,
                           help="finetuned: host layers re-trained on compressed features")
    raw_weights = st.checkbox("Uncompressed weights", value=False)
    hw = hw_base.with_raw_weights() if raw_weights else hw_base

    st.divider()
    st.caption("Accuracy curves are AlexNet-only; other networks evaluate without encoding.")


# ─────────────────────────────────────────────────────────────────────────────
#  HEADER BAR
# ─────────────────────────────────────────────────────────────────────────────
st.markdown(
    f"""
    <div class="es-header">
      <div>
        <div class="es-logo">Edge<span>Split</span>&nbsp;Explorer</div>
        <div class="es-tagline">Partitioned DNN inference · feature encoding · edge energy</div>
      </div>
      <div class="es-badge">{net.name} · {fmt_rate(ch.datarate_bps)} · {objective}</div>
    </div>
    """,
    unsafe_allow_html=True,
)

# Curves only describe the network they were measured on
net_curves = curves if curves.network == net.name else None
encodings = list(ENCODING_MODES) if net_curves is not None else [NONE]

TAB_DM, TAB_PR, TAB_OP, TAB_SW, TAB_CL = st.tabs([
    "🧮  Demand",
    "📈  Partition Profile",
    "🎯  Optimum",
    "📶  Bandwidth Sweep",
    "🧪  Codec Lab",
])

# ═════════════════════════════════════════════════════════════════════════════
#  DEMAND TAB
# ═════════════════════════════════════════════════════════════════════════════
with TAB_DM:
    demand = demand_table(net)
    d1, d2, d3, d4 = st.columns(4)
    d1.metric("Total MACs", f"{demand['macs'].sum() / 1e9:.2f} G")
    d2.metric("Weights", fmt_bytes(demand["weight_bytes"].sum()))
    d3.metric("Input features", fmt_bytes(net.input_bytes()))
    d4.metric("Compute layers", len(net.compute_layers()))

    section_label("◈", "Cumulative demand and feature size per layer")
    st.line_chart(demand.set_index("name")[["cum_macs"]])
    st.bar_chart(demand.set_index("name")[["out_feature_bytes"]])
    st.dataframe(demand, use_container_width=True, hide_index=True)

# ═════════════════════════════════════════════════════════════════════════════
#  PROFILE TAB
# ═════════════════════════════════════════════════════════════════════════════
with TAB_PR:
    frames = []
    for mode in encodings:
        prof = profile(net, hw, ch, mode, net_curves, max_loss, variant)
        if not prof.empty:
            frames.append(prof)
    profiles = pd.concat(frames, ignore_index=True)

    section_label("◈", "Throughput (fps) per cut")
    st.line_chart(profiles.pivot_table(index="p", columns="encoding", values="fps"))
    section_label("◈", "Edge energy (J/frame) per cut")
    st.line_chart(profiles.pivot_table(index="p", columns="encoding", values="J_per_frame"))

    with st.expander("All evaluated cuts", expanded=False):
        st.dataframe(profiles, use_container_width=True, hide_index=True)

# ═════════════════════════════════════════════════════════════════════════════
#  OPTIMUM TAB
# ═════════════════════════════════════════════════════════════════════════════
with TAB_OP:
    pt, best = optimize_partition(net, hw, ch, net_curves, max_loss, objective, encodings, variant)
    o1, o2, o3, o4 = st.columns(4)
    o1.metric("Cut after", best.layer, delta=f"p = {pt.index}", delta_color="off")
    o2.metric("Encoding", str(pt.encoding))
    o3.metric("Throughput", f"{best.throughput_fps:.1f} fps", delta=f"{best.bottleneck}-bound", delta_color="off")
    o4.metric("Energy", f"{best.energy_per_frame_J * 1e3:.3f} mJ/frame",
              delta=f"{best.frames_per_J:,.0f} frames/J", delta_color="off")

    section_label("◈", "Against host-only and edge-only inference")
    h = headline(net, hw, ch, net_curves, max_loss, objective, encodings, variant)
    k1, k2, k3, k4 = st.columns(4)
    k1.metric("fps vs host", f"{h.fps_vs_host:.1f}×")
    k2.metric("energy vs host", f"{h.energy_vs_host:.1f}×")
    k3.metric("fps vs edge", f"{h.fps_vs_edge:.1f}×")
    k4.metric("energy vs edge", f"{h.energy_vs_edge:.1f}×")
    st.dataframe(h.to_frame(), use_container_width=True, hide_index=True)

# ═════════════════════════════════════════════════════════════════════════════
#  SWEEP TAB
# ═════════════════════════════════════════════════════════════════════════════
with TAB_SW:
    section_label("◈", "Optimal cut per radio mode")
    result = sweep(
        net, hw, net_curves, max_loss,
        [rate for rate, _ in ch_base.modes], [power for _, power in ch_base.modes],
        encodings=encodings, variant=variant, paired=True,
    )
    st.dataframe(result.to_frame(), use_container_width=True, hide_index=True)

# ═════════════════════════════════════════════════════════════════════════════
#  CODEC LAB TAB
# ═════════════════════════════════════════════════════════════════════════════
with TAB_CL:
    c1, c2, c3 = st.columns(3)
    with c1:
        nonzero = st.slider("Non-zero ratio", 0.0, 1.0, 0.15, 0.05)
    with c2:
        clustering = st.slider("Spatial clustering", 0.0, 4.0, 2.0, 0.5)
    with c3:
        qf = st.slider("Quality factor", 1, 100, 30)

    tensor = generate(SynthSpec((256, 13, 13), nonzero, spatial_clustering=clustering, seed=42))
    stats = feature_stats(tensor)
    lossless = encode_lossless(tensor)
    lossy = encode_lossy(tensor, qf)

    l1, l2, l3, l4 = st.columns(4)
    l1.metric("Entropy", f"{stats.entropy_bits:.2f} bit")
    l2.metric("Non-zero", f"{stats.nonzero_ratio:.1%}")
    l3.metric(f"{LOSSLESS} ratio", f"{tensor.raw_bytes / len(lossless):.1f}×")
    l4.metric(f"{LOSSY} ratio (qf {qf})", f"{tensor.raw_bytes / len(lossy):.1f}×")
