"""
Comparator Tool

Paired comparison of two optimisation schemes (by default the STAR-RIS against
the conventional split surface) over the trials of a campaign.
"""

import json
import logging
import math

import numpy as np
from scipy.stats import binomtest

logger = logging.getLogger(__name__)


class SchemeComparator:

    def __init__(self, candidate="star", reference="conventional"):
        self.candidate = candidate
        self.reference = reference
        self.results = []

    def assess_trial(self, seed, swept_value, candidate_record, reference_record):
        """
        Compare the two schemes on one channel realisation.

        Parameters:
        - seed: trial seed shared by both records
        - swept_value: value of the swept parameter (None without a sweep)
        - candidate_record / reference_record: TrialRecords of the two schemes

        Returns:
        - Dictionary with both spectral efficiencies and their gain
        """
        candidate_se = candidate_record.final_spectral_efficiency
        reference_se = reference_record.final_spectral_efficiency
        result = {
            'id': f"{seed}@{swept_value}",
            'seed': seed,
            'swept_value': swept_value,
            self.candidate: {
                'spectral_efficiency': candidate_se,
                'feasible': candidate_record.feasible,
                'iterations': candidate_record.iterations,
            },
            self.reference: {
                'spectral_efficiency': reference_se,
                'feasible': reference_record.feasible,
                'iterations': reference_record.iterations,
            },
            'comparison': {
                'absolute_gain': candidate_se - reference_se,
                'percentage_gain': (candidate_se - reference_se) / reference_se * 100 if reference_se > 0 else 0.0,
                'winner': self._winner(candidate_se, reference_se),
            }
        }
        self.results.append(result)
        return result

    def _winner(self, candidate_se, reference_se):
        if candidate_se > reference_se:
            return self.candidate
        if candidate_se < reference_se:
            return self.reference
        return "tie"

    def add_records(self, records):
        """Pair records of the two schemes that share seed and swept value; returns the pair count."""
        by_key = {}
        for record in records:
            if record.scheme in (self.candidate, self.reference):
                by_key.setdefault((record.seed, record.swept_value), {})[record.scheme] = record
        paired = 0
        for (seed, swept_value), schemes in by_key.items():
            if self.candidate not in schemes or self.reference not in schemes:
                continue
            candidate, reference = schemes[self.candidate], schemes[self.reference]
            if not (math.isfinite(candidate.final_spectral_efficiency)
                    and math.isfinite(reference.final_spectral_efficiency)):
                logger.debug("Skipping pair %s@%s with a failed trial", seed, swept_value)
                continue
            self.assess_trial(seed, swept_value, candidate, reference)
            paired += 1
        return paired

    def sign_test(self, results=None):
        """One-sided paired sign test that the candidate wins more often than it loses."""
        results = self.results if results is None else results
        wins = sum(1 for r in results if r['comparison']['winner'] == self.candidate)
        losses = sum(1 for r in results if r['comparison']['winner'] == self.reference)
        ties = len(results) - wins - losses
        p_value = binomtest(wins, wins + losses, 0.5, alternative='greater').pvalue if wins + losses else 1.0
        return {"wins": wins, "losses": losses, "ties": ties, "p_value": float(p_value)}

    def _summary(self, results):
        candidate_mean = float(np.mean([r[self.candidate]['spectral_efficiency'] for r in results]))
        reference_mean = float(np.mean([r[self.reference]['spectral_efficiency'] for r in results]))
        return {
            "pairs": len(results),
            "average_spectral_efficiency": {
                self.candidate: candidate_mean,
                self.reference: reference_mean,
                "difference": candidate_mean - reference_mean,
            },
            "relative_gain": (candidate_mean - reference_mean) / reference_mean if reference_mean > 0 else 0.0,
            "sign_test": self.sign_test(results),
        }

    def analyse_results(self):
        """
        Analyse paired results and generate statistics.

        Returns:
        - Dictionary with overall and per-sweep-point statistics
        """
        if not self.results:
            return {"error": "No paired trials assessed yet"}

        analysis = self._summary(self.results)
        points = {}
        for result in self.results:
            points.setdefault(result['swept_value'], []).append(result)
        analysis["per_point"] = {str(value): self._summary(group) for value, group in points.items()}

        sorted_by_gain = sorted(self.results, key=lambda r: r['comparison']['absolute_gain'], reverse=True)
        analysis["largest_gains"] = [
            {
                "id": r['id'],
                self.candidate: r[self.candidate]['spectral_efficiency'],
                self.reference: r[self.reference]['spectral_efficiency'],
                "gain": r['comparison']['absolute_gain'],
            }
            for r in sorted_by_gain[:5]
        ]
        return analysis

    def export_results_to_json(self, filename):
        """
        Export paired results to JSON file.

        Parameters:
        - filename: Name of JSON file to create
        """
        if not self.results:
            return False

        with open(filename, 'w') as jsonfile:
            json.dump(self.results, jsonfile, indent=2)

        return True

    def load_from_json(self, filename):
        """
        Load previously saved results from JSON file.

        Parameters:
        - filename: Name of JSON file to load
        """
        try:
            with open(filename, 'r') as jsonfile:
                self.results = json.load(jsonfile)
            return True
        except (FileNotFoundError, json.JSONDecodeError):
            return False
