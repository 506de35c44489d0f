#!/usr/bin/env python3
"""
📈 BSS – Experiment Dashboard
-----------------------------
Aplicación Streamlit para inspeccionar la salida de ``bss experiment``
(``report.json`` y ``replications.csv``): sesgo de la LGN a lo largo de la
escalera de Δ_n, histogramas del estadístico del TCL contra la densidad
normal teórica, cobertura del intervalo de α̂ y curvas λ(H).

Las figuras se construyen con funciones puras para poder testearlas sin
levantar el servidor.
"""

import json
import os
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st
from scipy import stats

from fbm_limits import ALPHA_CLAMP, lambda_matrix

# ---------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------

def load_report(outputs_dir: str) -> Tuple[Dict, pd.DataFrame]:
    """Carga ``report.json`` y ``replications.csv`` desde ``outputs_dir``."""
    with open(os.path.join(outputs_dir, 'report.json'), encoding='utf-8') as fh:
        report = json.load(fh)
    replications = pd.read_csv(os.path.join(outputs_dir, 'replications.csv'), float_precision='round_trip')
    return report, replications


def rows_frame(report: Dict) -> pd.DataFrame:
    return pd.DataFrame(report.get('rows', []))


def lln_bias_figure(rows: pd.DataFrame) -> go.Figure:
    """|sesgo| ± 2 SE contra Δ_n (ejes log), una serie por v."""
    df = rows.dropna(subset=['bias']).copy()
    df['abs_bias'] = df['bias'].abs()
    df['band'] = 2 * df['se'].fillna(0.0)
    df['v'] = df['v'].astype(str)
    fig = px.line(df, x='delta_n', y='abs_bias', color='v', error_y='band', markers=True,
                  log_x=True, title='LLN bias along the Δ_n ladder',
                  labels={'delta_n': 'Δ_n', 'abs_bias': '|mean − limit|'})
    return fig


def clt_histogram_figure(replications: pd.DataFrame, delta_n: float, v: int, theory_variance: float) -> go.Figure:
    """Histograma normalizado del estadístico y densidad N(0, Σ_vv)."""
    sel = replications[(replications['delta_n'] == delta_n) & (replications['v'] == v)]
    values = sel['statistic_value'].to_numpy(dtype=float)
    sd = float(np.sqrt(theory_variance))
    grid = np.linspace(-4 * sd, 4 * sd, 201)
    fig = go.Figure()
    fig.add_trace(go.Histogram(x=values, histnorm='probability density', name='replications', nbinsx=30))
    fig.add_trace(go.Scatter(x=grid, y=stats.norm.pdf(grid, scale=sd), mode='lines', name='N(0, Σ_vv)'))
    fig.update_layout(title=f'CLT statistic, Δ_n = {delta_n:g}, v = {v}', xaxis_title='statistic',
                      yaxis_title='density', bargap=0.05)
    return fig


def coverage_figure(rows: pd.DataFrame, level: float = 0.95) -> go.Figure:
    """Cobertura empírica ± 2 SE binomial con la línea del nivel nominal."""
    df = rows.copy()
    df['band'] = 2 * df['binomial_se']
    fig = px.scatter(df, x='delta_n', y='coverage', error_y='band', log_x=True,
                     title='Confidence interval coverage', labels={'delta_n': 'Δ_n'})
    fig.add_hline(y=level, line_dash='dash', annotation_text=f'nominal {level:.0%}')
    return fig


def lambda_curve_frame(k: int, hursts: Sequence[float]) -> pd.DataFrame:
    """λ11, λ12, λ22 sobre una grilla de H (dentro del rango admitido)."""
    lo, hi = ALPHA_CLAMP.get(k, ALPHA_CLAMP['default'])
    records = []
    for H in hursts:
        if not lo + 0.5 <= H <= hi + 0.5:
            continue
        lam = lambda_matrix(float(H), k, allow_uncertified=True)
        records.append({'H': float(H), 'lambda_11': lam.lambda_11,
                        'lambda_12': lam.lambda_12, 'lambda_22': lam.lambda_22})
    return pd.DataFrame(records, columns=['H', 'lambda_11', 'lambda_12', 'lambda_22'])


def lambda_curve_figure(curve: pd.DataFrame, k: int) -> go.Figure:
    long = curve.melt(id_vars='H', var_name='entry', value_name='value')
    return px.line(long, x='H', y='value', color='entry', title=f'Λ_{k}(H) entries',
                   labels={'value': 'λ'})


# ---------------------------------------------------------------------
# Streamlit UI
# ---------------------------------------------------------------------

def main():
    st.set_page_config(layout='wide', page_title='BSS – Experiment Dashboard')
    st.title('BSS – Experiment Dashboard')

    st.markdown(
        """
        ### How to read this dashboard
        * **LLN**: absolute bias of the scaled quadratic variation per Δ_n; it should shrink down the ladder.
        * **CLT**: histogram of Δ_n^{-1/2}(scaled QV − limit) against the theoretical normal density.
        * **Coverage**: fraction of confidence intervals containing the true α, with binomial error bars.
        * **Λ_k(H)**: asymptotic covariance entries of the filtered fBm used for standardisation.
        """
    )

    # 1. Directorio de outputs ------------------------------------------------
    outputs_dir = st.sidebar.text_input('Experiment output folder', value='out/lln_single')
    if not os.path.isfile(os.path.join(outputs_dir, 'report.json')):
        st.error(f'No report.json in {outputs_dir}. Run `bss experiment` first.')
        st.stop()

    report, replications = load_report(outputs_dir)
    rows = rows_frame(report)
    kind = report['kind']
    st.sidebar.markdown(f"**Kind:** {kind}  \n**Passed:** {'✅' if report['passed'] else '❌'}")
    if report.get('insufficient_sample'):
        st.warning('Insufficient sample: no statistical test was performed.')

    # 2. Figuras por tipo -----------------------------------------------------
    if kind in ('LLN', 'Quarticity') and not rows.empty:
        st.header('Mean along the Δ_n ladder')
        st.plotly_chart(lln_bias_figure(rows), use_container_width=True)
    elif kind == 'CLT' and not rows.empty:
        st.header('CLT statistic')
        deltas = sorted(replications['delta_n'].unique())
        delta_n = st.sidebar.selectbox('Δ_n', deltas, index=len(deltas) - 1)
        v = st.sidebar.radio('v', [1, 2], horizontal=True)
        theory = rows[(rows['delta_n'] == delta_n) & (rows['v'] == v)]['theory_variance'].iloc[0]
        st.plotly_chart(clt_histogram_figure(replications, delta_n, v, theory), use_container_width=True)
    elif kind == 'Coverage' and not rows.empty:
        st.header('Coverage')
        st.plotly_chart(coverage_figure(rows), use_container_width=True)

    st.subheader('Rows')
    st.dataframe(rows, height=300)
    st.subheader('Tests')
    st.dataframe(pd.DataFrame(report.get('tests', [])), height=300)

    # 3. Curvas λ(H) -----------------------------------------------------------
    with st.expander('Λ_k(H) curves', expanded=False):
        k = int(report['metadata']['config']['k'])
        hursts = np.linspace(0.05, 0.95, 19)
        curve = lambda_curve_frame(k, hursts)
        st.plotly_chart(lambda_curve_figure(curve, k), use_container_width=True)


if __name__ == '__main__':
    main()
