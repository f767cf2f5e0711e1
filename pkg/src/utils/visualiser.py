"""
Visualisation Tool

Figures for campaign results: convergence traces, spectral efficiency against
the swept parameter, the per-element energy split of a surface profile and the
distribution of paired scheme gains.
"""

import logging

import matplotlib.pyplot as plt
import numpy as np

from src.utils.comparator import SchemeComparator

logger = logging.getLogger(__name__)

AXIS_LABELS = {
    "none": "",
    "p_max_dbm": "$P_{max}$ (dBm)",
    "num_elements": "Number of elements N",
    "gamma_min_db": r"$\gamma_{min}$ (dB)",
}


class ResultVisualisation:
    def __init__(self, records=None, summary=None, sweep_axis="none", comparator=None):
        self.records = records or []
        self.summary = summary or []
        self.sweep_axis = sweep_axis
        self.comparator = comparator or SchemeComparator()

        self.colours = {
            'star': '#1A5F7A',
            'conventional': '#A12D5F',
            'random_phase': '#2E8B57',
            'background': '#F4F6F7',
            'text': '#2C3E50'
        }

        plt.style.use('seaborn-v0_8-whitegrid')
        self._set_custom_style()

    def _set_custom_style(self):
        plt.rcParams['figure.figsize'] = (10, 6)
        plt.rcParams['font.size'] = 10
        plt.rcParams['axes.labelsize'] = 12
        plt.rcParams['axes.titlesize'] = 14
        plt.rcParams['axes.labelcolor'] = self.colours['text']
        plt.rcParams['legend.fontsize'] = 10
        plt.rcParams['figure.facecolor'] = self.colours['background']
        plt.rcParams['axes.facecolor'] = 'white'

    def _colour(self, scheme):
        return self.colours.get(scheme, 'gray')

    @staticmethod
    def _save(fig, save_path):
        plt.tight_layout()
        if save_path:
            fig.savefig(save_path, dpi=300, bbox_inches='tight')

    def plot_convergence(self, save_path=None):
        """Individual traces (faint) and their mean per scheme against the outer iteration."""
        traced = [r for r in self.records if r.trace]
        if not traced:
            logger.warning("No traces available for visualisation")
            return None

        fig, ax = plt.subplots()
        for scheme in dict.fromkeys(r.scheme for r in traced):
            traces = [r.trace for r in traced if r.scheme == scheme]
            length = max(len(t) for t in traces)
            # converged traces are held at their final value
            padded = np.array([t + [t[-1]] * (length - len(t)) for t in traces])
            iterations = np.arange(1, length + 1)
            for row in padded:
                ax.plot(iterations, row, color=self._colour(scheme), alpha=0.15, linewidth=0.8)
            ax.plot(iterations, padded.mean(axis=0), color=self._colour(scheme), linewidth=2.2,
                    marker='o', markersize=4, label=f"{scheme} (mean of {len(traces)})")

        ax.set_xlabel('Outer iteration', fontweight='bold')
        ax.set_ylabel('Spectral efficiency (bits/s/Hz)', fontweight='bold')
        ax.set_title('Convergence of the alternating optimisation', fontweight='bold')
        ax.legend()
        self._save(fig, save_path)
        return fig, ax

    def plot_sweep(self, save_path=None):
        """Mean spectral efficiency with one-standard-deviation bars per scheme."""
        rows = [r for r in self.summary if r['swept_value'] is not None]
        if not rows:
            logger.warning("No sweep summary available for visualisation")
            return None

        fig, ax = plt.subplots()
        for scheme in dict.fromkeys(r['scheme'] for r in rows):
            points = sorted((r for r in rows if r['scheme'] == scheme), key=lambda r: r['swept_value'])
            ax.errorbar([p['swept_value'] for p in points],
                        [p['mean_spectral_efficiency'] for p in points],
                        yerr=[p['std_spectral_efficiency'] for p in points],
                        color=self._colour(scheme), marker='s', capsize=4, linewidth=1.8, label=scheme)

        ax.set_xlabel(AXIS_LABELS.get(self.sweep_axis, self.sweep_axis), fontweight='bold')
        ax.set_ylabel('Spectral efficiency (bits/s/Hz)', fontweight='bold')
        ax.set_title('Spectral efficiency across the sweep', fontweight='bold')
        ax.legend()
        self._save(fig, save_path)
        return fig, ax

    def plot_energy_split(self, profile, save_path=None):
        """Stacked transmitted and reflected energy per element; strict ES sits on the dashed line."""
        beta_t, beta_r = profile.beta_t, profile.beta_r
        elements = np.arange(1, beta_t.size + 1)

        fig, ax = plt.subplots(figsize=(12, 5))
        ax.bar(elements, beta_t, color=self.colours['star'], alpha=0.85, label=r'$\beta^t_n$')
        ax.bar(elements, beta_r, bottom=beta_t, color=self.colours['conventional'], alpha=0.85,
               label=r'$\beta^r_n$')
        ax.axhline(y=1.0, linestyle='--', color='gray', alpha=0.7)

        ax.set_xlabel('Element index', fontweight='bold')
        ax.set_ylabel('Energy fraction', fontweight='bold')
        ax.set_title('Energy split per surface element', fontweight='bold')
        ax.set_ylim(0, 1.15)
        ax.legend()
        self._save(fig, save_path)
        return fig, ax

    def plot_gain_distribution(self, save_path=None):
        """Histogram of the paired spectral-efficiency gains held by the comparator."""
        if not self.comparator.results:
            logger.warning("No paired results available for visualisation")
            return None

        gains = [r['comparison']['absolute_gain'] for r in self.comparator.results]
        fig, ax = plt.subplots()
        ax.hist(gains, bins=min(20, max(5, len(gains) // 3)), color=self.colours['star'], alpha=0.7)
        ax.axvline(x=0.0, linestyle='--', color='gray', alpha=0.7)
        ax.axvline(x=float(np.mean(gains)), color=self.colours['conventional'], linewidth=2,
                   label=f"mean {np.mean(gains):.3f}")

        ax.set_xlabel(f"{self.comparator.candidate} - {self.comparator.reference} (bits/s/Hz)", fontweight='bold')
        ax.set_ylabel('Frequency', fontweight='bold')
        ax.set_title('Paired spectral-efficiency gain', fontweight='bold')
        ax.legend()
        self._save(fig, save_path)
        return fig, ax
