# Subject language package
