"""Signed-rank testing, multiple-testing adjustment and stratified sampling."""

from .families import FamilyTestReport, adjust_sd_minp, alpha_sweep, bonferroni, test_each_family
from .normal import log_tail_normal, log_tail_normal_array
from .stratified import StratifiedCI, stratified_ci, stratified_log_pvalues
from .wilcoxon import TestResult, wilcoxon_one_tailed_less

__all__ = [
    "FamilyTestReport",
    "StratifiedCI",
    "TestResult",
    "adjust_sd_minp",
    "alpha_sweep",
    "bonferroni",
    "log_tail_normal",
    "log_tail_normal_array",
    "stratified_ci",
    "stratified_log_pvalues",
    "test_each_family",
    "wilcoxon_one_tailed_less",
]
