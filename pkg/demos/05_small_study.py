"""
A small repeated-sampling study
================================

Draw many independent coalition samples, take the spread of the estimates as
the reference SD, and compare it with the mean bootstrap SD of each method.
The command line equivalent is

    shapwor study --synthetic p=5,n=2864,rho=0.5 --coalitions 16 --runs 100 --out study-out
"""
import numpy as np

from shapwor import StudyConfig, run_study

report = run_study(StudyConfig(runs=100, replicates=100, instances=10))
print("strata drawn:", report.plan["drawn"], "of", report.plan["pairs"])
for method, ratio in report.ratios().items():
    print(f"{method:12s} bootstrap/resampled SD per feature: {np.round(ratio, 2)}")
    print(f"{'':12s} singular replicates per run: {report.mean_failures[method]:.1f}")
