# creates a folder with an example scenario

'''
usage:
```python
import dipolar
dipolar.make_example('path/to/folder', 'transfer_overrides')
```

or `dipolar example transfer_overrides path/to/folder`
'''
import logging
import shutil
from pathlib import Path
from typing import Literal, Union

logger = logging.getLogger(__name__)

examples = ['transfer_overrides', 'vacuum_pair', 'resonator_rabi']
ExampleName = Literal['transfer_overrides', 'vacuum_pair', 'resonator_rabi']


def example_path(example_name: ExampleName) -> Path:
    if example_name not in examples:
        raise ValueError(f'example {example_name} not in available examples {examples}')
    return Path(__file__).resolve().parent / 'examples' / example_name


def make_example(download_to_path: Union[str, Path], example_name: ExampleName) -> Path:
    source = example_path(example_name)
    dest_path = Path(download_to_path).resolve() / example_name
    logger.info('creating %s at %s', example_name, dest_path)
    shutil.copytree(src=source, dst=dest_path, ignore=shutil.ignore_patterns('__pycache__'))
    return dest_path
