from typing import Any

import pandas as pd


def import_from_csv(file_path: str) -> dict[str, list[Any]]:
    """
    Function that imports a CSV table as a dictionary of columns.

    :param file_path: the path to the CSV file.
    :return: the dictionary mapping each column header to the list of its entries.
    """

    df = pd.read_csv(file_path)
    return {str(col): df[col].tolist() for col in df.columns}


def export_to_csv(file_path: str, data: dict[str, Any] | list[dict[str, Any]]) -> None:
    """
    Function that exports a table to a CSV file.

    A dictionary is read column-wise: scalar values are repeated to the length of the
    longest column. A list of dictionaries is read row-wise, one row per element.

    :param file_path: the path to the CSV file to be created.
    :param data: the columns, or the rows.
    :raises ValueError: if a column holds a nested dictionary or the columns differ in length.
    """

    if isinstance(data, list):
        df = pd.DataFrame.from_records(data)
    else:
        for value in data.values():
            if isinstance(value, dict):
                raise ValueError("Nested dictionaries are not allowed")

        max_length = max(((len(v) if isinstance(v, list) else 1) for v in data.values()), default=0)
        normalized = {
            key: (value if isinstance(value, list) else [value] * max_length)
            for key, value in data.items()
        }
        lengths = {len(v) for v in normalized.values()}
        if len(lengths) > 1:
            raise ValueError(f"Columns have different lengths: {sorted(lengths)}")
        df = pd.DataFrame(normalized)

    df.to_csv(file_path, index=False, float_format="%.17g")
