from klt.bounds import BoundReport, ProofParameters, choose_params, compare_bounds, theorem1_bound
from klt.config import RunConfig, load_config
from klt.csv import export_to_csv, import_from_csv
from klt.errors import *
from klt.fejer import FejerLaw, SumDistribution, convolve, p_zero
from klt.frequency import FrequencySpec, LinearFormInstance, parse_frequency_file
from klt.lattice import XiResult, independence_check, xi
from klt.logger import Logger
from klt.poly import DirichletPolynomial, GeneralizedPolynomial, kronecker_transfer_check
from klt.replay import WeightedSumDistribution, key_inequality_check
from klt.search import TargetInstance, WitnessResult, find_witness
